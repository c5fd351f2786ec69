"""gatewatch command line: crawl/ingest fixtures, run analysis stages, emit
reports, and serve the labeling API.

Every stage writes outputs keyed by MessageKey hex under the out directory,
so stages can run independently and re-running a stage with unchanged
inputs produces byte-identical files. Exit codes: 2 for configuration
errors, 3 for data errors, with a machine-readable JSON error on stderr.
"""

from __future__ import annotations

import json
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import click

from gatewatch.config import ConfigError, PipelineConfig


def _fail(code: int, kind: str, message: str) -> None:
    click.echo(json.dumps({"error": kind, "message": message}), err=True)
    sys.exit(code)


def _load_store(path: Path, writable: bool = False):
    from gatewatch.store import MessageStore

    if not (path / "segments").exists() and not writable:
        _fail(3, "data", f"no store at {path}")
    return MessageStore(path, writable=writable)


def _sorted_corpus(store) -> list[tuple[str, str]]:
    from gatewatch.messages import message_key

    pairs = [(message_key(m).hex(), m.content) for m in store]
    pairs.sort(key=lambda kv: kv[0])
    return pairs


def _pmap(fn, items, workers: int):
    """Deterministic parallel map: results come back in input order."""
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _write_json(path: Path, data) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(data, ensure_ascii=False, indent=1, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def _read_json(path: Path, what: str):
    if not path.exists():
        _fail(3, "data", f"missing {what}: {path} (run the producing stage first)")
    return json.loads(path.read_text(encoding="utf-8"))


@click.group()
@click.option("--store", "store_path", default="store", show_default=True,
              type=click.Path(path_type=Path), help="Message store directory.")
@click.option("--out", "out_dir", default="out", show_default=True,
              type=click.Path(path_type=Path), help="Stage output directory.")
@click.option("--config", "config_path", default=None,
              type=click.Path(path_type=Path),
              envvar="GATEWATCH_CONFIG", help="Pipeline config file (YAML).")
@click.option("--workers", default=1, show_default=True, help="Worker threads for pure stages.")
@click.pass_context
def main(ctx, store_path, out_dir, config_path, workers):
    try:
        if config_path:
            cfg = PipelineConfig.load(config_path)
        else:
            cfg = PipelineConfig()
        cfg.store_path = store_path
        cfg.out_dir = out_dir
        cfg.workers = workers
    except ConfigError as exc:
        _fail(2, "config", str(exc))
    except OSError as exc:
        _fail(2, "config", str(exc))
    ctx.obj = cfg


@main.command()
@click.option("--config", "gateway_config", required=True,
              type=click.Path(exists=True, path_type=Path),
              help="Gateway config file (YAML list).")
@click.option("--fixtures", type=click.Path(path_type=Path), default=None,
              help="Fixture root for fixture adapters.")
@click.option("--once/--loop", default=True, help="Single pass or scheduled loop.")
@click.option("--rounds", default=10, show_default=True,
              help="Max scheduling rounds in --loop mode.")
@click.pass_obj
def crawl(cfg: PipelineConfig, gateway_config, fixtures, once, rounds):
    """Fetch gateway inboxes and insert messages into the store."""
    from gatewatch.ingest import CrawlPlan, load_gateway_configs, make_adapter, schedule_next
    from gatewatch.messages import Dpn
    from gatewatch.store import StoreError

    try:
        gateways = load_gateway_configs(gateway_config)
    except (KeyError, ValueError) as exc:
        _fail(2, "config", f"{gateway_config}: {exc}")
    store = _load_store(cfg.store_path, writable=True)
    inserted = duplicates = 0
    try:
        for gw in gateways:
            adapter = make_adapter(gw, fixtures)
            dpns = adapter.list_dpns() if hasattr(adapter, "list_dpns") else []
            for e164 in dpns:
                dpn = Dpn.from_e164(e164)
                prev = None
                plan = CrawlPlan(gw.id, e164, datetime.now(timezone.utc), gw.min_period)
                passes = 1 if once else rounds
                for _ in range(passes):
                    snapshot = adapter.fetch_inbox(dpn)
                    for msg in snapshot.messages:
                        from gatewatch.store import InsertResult

                        if store.insert(msg) is InsertResult.INSERTED:
                            inserted += 1
                        else:
                            duplicates += 1
                    plan = schedule_next(plan, gw, snapshot, prev, cfg.safety_factor)
                    prev = snapshot
                    if once:
                        break
    except StoreError as exc:
        _fail(3, "data", str(exc))
    finally:
        store.close()
    click.echo(f"inserted={inserted} duplicates={duplicates}")


@main.command()
@click.option("--fixtures", required=True, type=click.Path(exists=True, path_type=Path),
              help="Directory of <gateway>/<e164>.jsonl fixture files.")
@click.pass_obj
def ingest(cfg: PipelineConfig, fixtures):
    """Bulk-load fixture JSONL records into the store with dedup."""
    from gatewatch.store import InsertResult, StoreError, decode_record

    store = _load_store(cfg.store_path, writable=True)
    inserted = duplicates = 0
    try:
        for path in sorted(Path(fixtures).glob("*/*.jsonl")):
            for line in path.read_text(encoding="utf-8").splitlines():
                line = line.strip()
                if not line:
                    continue
                try:
                    msg = decode_record(line)
                except (KeyError, ValueError) as exc:
                    _fail(3, "data", f"{path}: {exc}")
                if store.insert(msg) is InsertResult.INSERTED:
                    inserted += 1
                else:
                    duplicates += 1
    except StoreError as exc:
        _fail(3, "data", str(exc))
    finally:
        store.close()
    click.echo(f"inserted={inserted} duplicates={duplicates}")


@main.command("langid")
@click.pass_obj
def langid_cmd(cfg: PipelineConfig):
    """Detect per-message language; writes languages.json."""
    from gatewatch.langid import LanguageDetector

    store = _load_store(cfg.store_path)
    detector = LanguageDetector()
    corpus = _sorted_corpus(store)
    results = _pmap(lambda kv: detector.detect(kv[1]), corpus, cfg.workers)
    _write_json(
        cfg.out_dir / "languages.json",
        {k: r.code for (k, _), r in zip(corpus, results)},
    )
    click.echo(f"labeled {len(corpus)} messages")


@main.command("attribute")
@click.option("--rules", "rules_path", default=None,
              type=click.Path(exists=True, path_type=Path),
              help="Service rule file; bundled seed rules when omitted.")
@click.pass_obj
def attribute_cmd(cfg: PipelineConfig, rules_path):
    """Attribute messages to services; writes services.json."""
    from gatewatch.attribution import ServiceRuleSet, attribute

    try:
        rules = ServiceRuleSet.load(rules_path or cfg.rules_path)
    except (KeyError, ValueError) as exc:
        _fail(2, "config", f"bad rule file: {exc}")
    store = _load_store(cfg.store_path)
    corpus = _sorted_corpus(store)
    labels = _pmap(lambda kv: attribute(kv[1], rules).service, corpus, cfg.workers)
    _write_json(
        cfg.out_dir / "services.json",
        {k: svc for (k, _), svc in zip(corpus, labels)},
    )
    click.echo(f"attributed {len(corpus)} messages")


@main.command("cluster")
@click.pass_obj
def cluster_cmd(cfg: PipelineConfig):
    """Cluster each service's messages into templates; writes clusters.jsonl."""
    from gatewatch.purpose import cluster

    store = _load_store(cfg.store_path)
    services = _read_json(cfg.out_dir / "services.json", "service labels")
    per_service: dict[str, list[tuple[str, str]]] = {}
    for khex, text in _sorted_corpus(store):
        per_service.setdefault(services.get(khex, "unknown"), []).append((khex, text))

    names = sorted(per_service)
    results = _pmap(
        lambda svc: cluster(per_service[svc], svc, cfg.simhash_threshold),
        names,
        cfg.workers,
    )
    out = cfg.out_dir / "clusters.jsonl"
    out.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with out.open("w", encoding="utf-8") as fh:
        next_id = 0
        for clusters in results:
            for c in clusters:
                rec = c.to_record()
                rec["id"] = next_id
                next_id += 1
                fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
                n += 1
    click.echo(f"wrote {n} clusters")


@main.command("label")
@click.option("--patterns", "patterns_path", default=None,
              type=click.Path(exists=True, path_type=Path),
              help="Purpose pattern file; bundled seed patterns when omitted.")
@click.pass_obj
def label_cmd(cfg: PipelineConfig, patterns_path):
    """Apply purpose patterns to clusters; writes purposes.json (per message)."""
    from gatewatch.purpose import (
        Purpose,
        TemplateCluster,
        label_cluster,
        load_purpose_patterns,
    )

    try:
        patterns = load_purpose_patterns(patterns_path or cfg.patterns_path)
    except (KeyError, ValueError) as exc:
        _fail(2, "config", f"bad pattern file: {exc}")
    clusters_path = cfg.out_dir / "clusters.jsonl"
    if not clusters_path.exists():
        _fail(3, "data", f"missing clusters: {clusters_path}")
    purposes: dict[str, str] = {}
    labeled = 0
    lines_out = []
    for line in clusters_path.read_text(encoding="utf-8").splitlines():
        rec = json.loads(line)
        c = TemplateCluster(
            id=rec["id"], service=rec["service"], bucket=rec["bucket"],
            exemplar=tuple(rec["exemplar"].split()) if rec["exemplar"] else (),
        )
        purpose = label_cluster(c, patterns)
        if purpose is not Purpose.UNLABELED:
            labeled += 1
        rec["purpose"] = purpose.value
        lines_out.append(json.dumps(rec, ensure_ascii=False, sort_keys=True))
        for member in rec["members"]:
            purposes[member] = purpose.value
    clusters_path.write_text("\n".join(lines_out) + "\n", encoding="utf-8")
    _write_json(cfg.out_dir / "purposes.json", purposes)
    click.echo(f"labeled {labeled} clusters")


@main.command("extract")
@click.option("--expand/--no-expand", default=False,
              help="Expand shortened URLs over the network.")
@click.option("--blocklist", default=None, type=click.Path(exists=True, path_type=Path),
              help="Offline reputation blocklist file.")
@click.pass_obj
def extract_cmd(cfg: PipelineConfig, expand, blocklist):
    """Extract OTPs/links per message; writes extraction.jsonl."""
    from gatewatch.extraction import (
        OfflineBlocklistClient,
        check_reputation,
        expand_many,
        extract,
        load_shortener_domains,
    )

    store = _load_store(cfg.store_path)
    corpus = _sorted_corpus(store)
    results = _pmap(lambda kv: extract(kv[1]), corpus, cfg.workers)

    expansions: dict[str, str] = {}
    if expand:
        domains = load_shortener_domains(cfg.shorteners_path)
        all_urls = sorted(
            {u for r in results for u in (*r.single_use_links, *r.other_urls)}
        )
        for outcome in expand_many(all_urls, domains):
            expansions[outcome.original] = outcome.final

    verdicts: dict[str, str] = {}
    if blocklist:
        client = OfflineBlocklistClient(blocklist)
        urls = sorted({u for r in results for u in r.other_urls})
        urls = [expansions.get(u, u) for u in urls]
        for v in check_reputation(urls, client):
            verdicts[v.url] = v.verdict.value

    out = cfg.out_dir / "extraction.jsonl"
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8") as fh:
        for (khex, _), r in zip(corpus, results):
            rec = {
                "key": khex,
                "otps": list(r.otps),
                "single_use_links": list(r.single_use_links),
                "other_urls": list(r.other_urls),
                "class": r.single_use_class.value,
            }
            if expansions:
                rec["expanded"] = {
                    u: expansions[u]
                    for u in (*r.single_use_links, *r.other_urls)
                    if u in expansions and expansions[u] != u
                }
            if verdicts:
                rec["verdicts"] = {
                    u: verdicts[expansions.get(u, u)]
                    for u in r.other_urls
                    if verdicts.get(expansions.get(u, u), "clean") != "clean"
                }
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
    click.echo(f"extracted {len(corpus)} messages")


REPORT_KINDS = (
    "volume", "lifetime", "overlap", "language", "country",
    "ttfm", "burst", "top-services",
)


@main.command("report")
@click.option("--kind", required=True, type=click.Choice(REPORT_KINDS))
@click.option("--plot/--no-plot", default=False, help="Also write a static plot (volume).")
@click.pass_obj
def report_cmd(cfg: PipelineConfig, kind, plot):
    """Emit a CSV report into the out directory."""
    from gatewatch import analytics

    store = _load_store(cfg.store_path)
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)

    def services():
        return _read_json(out / "services.json", "service labels")

    try:
        if kind == "volume":
            rows = analytics.volume_report(store)
            analytics.write_volume_csv(rows, out / "volume.csv")
            if plot:
                _volume_plot(rows, out / "volume.png")
        elif kind == "lifetime":
            rows = analytics.lifetime_report(store, None)
            analytics.write_lifetime_csv(rows, out / "lifetime.csv")
        elif kind == "overlap":
            analytics.write_overlap_csv(analytics.overlap_report(store), out / "overlap.csv")
        elif kind == "language":
            langs = _read_json(out / "languages.json", "language labels")
            analytics.write_language_csv(
                analytics.language_report(store, langs), out / "language.csv"
            )
        elif kind == "country":
            analytics.write_country_csv(analytics.country_report(store), out / "country.csv")
        elif kind == "ttfm":
            analytics.write_ttfm_csv(
                analytics.ttfm_report(store, services()), out / "ttfm.csv"
            )
        elif kind == "burst":
            purposes = _read_json(out / "purposes.json", "purpose labels")
            analytics.write_burst_csv(
                analytics.burst_report(store, services(), purposes, cfg.burst_min),
                out / "burst.csv",
            )
        elif kind == "top-services":
            analytics.write_top_services_csv(
                analytics.top_services_report(store, services()), out / "top_services.csv"
            )
    except analytics.EmptyStore as exc:
        _fail(3, "data", str(exc))
    click.echo(f"wrote {kind} report")


def _volume_plot(rows, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    dates = [r[0] for r in rows]
    fig, ax = plt.subplots(figsize=(10, 4))
    ax.plot(dates, [r[1] for r in rows], label="messages")
    ax.plot(dates, [r[2] for r in rows], label="active DPNs")
    ax.legend()
    ax.set_xlabel("date")
    fig.autofmt_xdate()
    fig.savefig(path, metadata={"Software": "gatewatch"})
    plt.close(fig)


@main.command("pipeline")
@click.option("--rules", "rules_path", default=None, type=click.Path(path_type=Path))
@click.option("--patterns", "patterns_path", default=None, type=click.Path(path_type=Path))
@click.pass_context
def pipeline_cmd(ctx, rules_path, patterns_path):
    """Run langid, attribute, cluster, label, extract and all reports."""
    ctx.invoke(langid_cmd)
    ctx.invoke(attribute_cmd, rules_path=rules_path)
    ctx.invoke(cluster_cmd)
    ctx.invoke(label_cmd, patterns_path=patterns_path)
    ctx.invoke(extract_cmd, expand=False, blocklist=None)
    for kind in REPORT_KINDS:
        ctx.invoke(report_cmd, kind=kind, plot=False)


@main.command("serve")
@click.option("--rules", "rules_path", default=None, type=click.Path(path_type=Path))
@click.option("--patterns", "patterns_path", default=None, type=click.Path(path_type=Path))
@click.option("--state-dir", default="label_state", type=click.Path(path_type=Path))
@click.option("--port", default=8787, show_default=True)
@click.option("--lan", is_flag=True, help="Bind on all interfaces instead of localhost.")
@click.option("--static", "static_dir", default=None, type=click.Path(path_type=Path),
              help="Directory with the built label console.")
@click.pass_obj
def serve_cmd(cfg: PipelineConfig, rules_path, patterns_path, state_dir, port, lan, static_dir):
    """Serve the labeling API (and console, if built) over HTTP."""
    from gatewatch.attribution import ServiceRuleSet
    from gatewatch.labelservice import LabelState, serve
    from gatewatch.purpose import Purpose, TemplateCluster, load_purpose_patterns

    store = _load_store(cfg.store_path)
    corpus = _sorted_corpus(store)
    rules = ServiceRuleSet.load(rules_path or cfg.rules_path)
    patterns = load_purpose_patterns(patterns_path or cfg.patterns_path)
    clusters = []
    clusters_path = cfg.out_dir / "clusters.jsonl"
    if clusters_path.exists():
        for line in clusters_path.read_text(encoding="utf-8").splitlines():
            rec = json.loads(line)
            clusters.append(
                TemplateCluster(
                    id=rec["id"], service=rec["service"], bucket=rec["bucket"],
                    exemplar=tuple(rec["exemplar"].split()) if rec["exemplar"] else (),
                    member_count=rec["member_count"],
                    purpose=Purpose(rec.get("purpose", "unlabeled")),
                    members=rec.get("members", []),
                )
            )
    state = LabelState(state_dir, rules, patterns, clusters)
    state.seed_keyword_tasks(text for _, text in corpus)
    state.seed_cluster_tasks()
    host = "0.0.0.0" if lan else "127.0.0.1"
    click.echo(f"serving on http://{host}:{port}")
    serve(state, host=host, port=port, recompile_corpus=corpus, static_dir=static_dir)


if __name__ == "__main__":
    main()
