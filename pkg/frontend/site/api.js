/**
 * Typed client for the label-service HTTP/JSON contract.
 *
 * The client tracks the server's state version from the X-State-Version
 * response header and sends it back as `expected_version` on every write,
 * so a console that has fallen behind the server is refused (409) instead
 * of silently clobbering newer state.
 */
/** Server rejected a write because our state version is behind. */
export class StaleVersionError extends Error {
    constructor(serverDetail) {
        super(`stale state version: ${serverDetail}`);
        this.serverDetail = serverDetail;
    }
}
/** Request never reached the server (network failure, service down). */
export class ConnectivityError extends Error {
    constructor(cause) {
        super(`label service unreachable: ${String(cause)}`);
    }
}
/** Any other non-2xx response. */
export class ApiError extends Error {
    constructor(status, detail) {
        super(`HTTP ${status}: ${detail}`);
        this.status = status;
    }
}
export class ApiClient {
    constructor(baseUrl, token) {
        this.baseUrl = baseUrl;
        this.token = token;
        /** Last state version observed in a response header; -1 before first call. */
        this.stateVersion = -1;
    }
    async health() {
        return this.request("GET", "/health");
    }
    async tasks(kind, limit = 20, offset = 0) {
        const query = `kind=${encodeURIComponent(kind)}&limit=${limit}&offset=${offset}`;
        const body = await this.request("GET", `/tasks?${query}`);
        return body.tasks;
    }
    async task(taskId) {
        return this.request("GET", `/tasks/${encodeURIComponent(taskId)}`);
    }
    async resolve(taskId, resolution) {
        return this.request("POST", `/tasks/${encodeURIComponent(taskId)}/resolve`, { ...resolution, expected_version: this.stateVersion });
    }
    async progress() {
        return this.request("GET", "/progress");
    }
    async mislabels() {
        return this.request("GET", "/mislabels");
    }
    async recompile() {
        return this.request("POST", "/recompile");
    }
    async request(method, path, body) {
        const headers = { accept: "application/json" };
        if (this.token)
            headers["authorization"] = `Bearer ${this.token}`;
        if (body !== undefined)
            headers["content-type"] = "application/json";
        let response;
        try {
            response = await fetch(this.baseUrl + path, {
                method,
                headers,
                body: body === undefined ? undefined : JSON.stringify(body),
            });
        }
        catch (err) {
            throw new ConnectivityError(err);
        }
        const versionHeader = response.headers.get("X-State-Version");
        if (versionHeader !== null)
            this.stateVersion = Number(versionHeader);
        if (!response.ok) {
            const detail = await response.text();
            if (response.status === 409)
                throw new StaleVersionError(detail);
            throw new ApiError(response.status, detail);
        }
        return (await response.json());
    }
}
