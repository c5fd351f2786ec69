"""gatewatch: message-intelligence pipeline for public SMS gateways."""

__version__ = "0.1.0"
