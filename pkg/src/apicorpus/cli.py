"""Pipeline orchestration: resumable stages behind one command.

Each stage writes its outputs plus a manifest recording the seed, the
config digest, and input/output digests. A stage whose manifest still
matches its inputs is skipped unless --force. Manifests carry no
timestamps so reruns are byte-identical.
"""

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from . import __version__, dataset_store, eval_harness, instruct_pipeline
from .clients import (
    HttpCompletionClient,
    HttpEmbeddingClient,
    HttpRerankClient,
    MockCompletionClient,
    MockEmbeddingClient,
    MockRerankClient,
)
from .dataset_store import DatasetInstance, read_corpus, split_levels, write_corpus
from .errors import (
    ApicorpusError,
    CorpusTooSmall,
    MalformedDocument,
    ServiceError,
    UnsupportedVersion,
)
from .oas_ingest import (
    HUBS,
    EndpointRecord,
    extract_records,
    filter_spec,
    parse_spec,
    record_key,
)
from .snippetgen import LANGUAGES, ApiCallSnippet, build_template, render_snippet
from .validate import validate_api_call

STAGES = ("ingest", "builddb", "instruct", "validate", "select",
          "split", "eval", "report")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PRECONDITION = 3
EXIT_SERVICE = 4


class ConfigError(Exception):
    pass


class PreconditionError(Exception):
    pass


_DEFAULTS = {
    "input_dir": None,  # null means the bundled mini corpus
    "work_dir": "work",
    "seed": 42,
    "split_mode": "scaled",
    "languages": list(LANGUAGES),
    "mock": True,
    "threshold": 0.9,
    "min_latin_fraction": 0.6,
    "per_api_examples": 3,
    "depth_limit": 4,
    "eval_modes": list(eval_harness.MODES),
    "retry": {"attempts": 3, "backoff": 0.0},
    "clients": {
        "completion": {"base_url": "", "model": "", "token_env": "APICORPUS_TOKEN"},
        "embedding": {"base_url": "", "model": "", "token_env": "APICORPUS_TOKEN",
                      "dim": 16},
        "rerank": {"base_url": "", "model": "", "token_env": "APICORPUS_TOKEN"},
    },
}


@dataclass
class PipelineConfig:
    values: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path=None, overrides=None) -> "PipelineConfig":
        merged = json.loads(json.dumps(_DEFAULTS))
        if path:
            try:
                with open(path, encoding="utf-8") as fh:
                    loaded = yaml.safe_load(fh) or {}
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}")
            except yaml.YAMLError as exc:
                raise ConfigError(f"bad config: {exc}")
            if not isinstance(loaded, dict):
                raise ConfigError("config root must be a mapping")
            for key, value in loaded.items():
                if isinstance(value, dict) and isinstance(merged.get(key), dict):
                    merged[key].update(value)
                else:
                    merged[key] = value
        for key, value in (overrides or {}).items():
            if value is not None:
                merged[key] = value
        cfg = cls(values=merged)
        cfg.check()
        return cfg

    def check(self):
        v = self.values
        if v["split_mode"] not in ("strict", "scaled"):
            raise ConfigError(f"split_mode {v['split_mode']!r} not strict|scaled")
        bad = [lang for lang in v["languages"] if lang not in LANGUAGES]
        if bad:
            raise ConfigError(f"unknown languages: {', '.join(bad)}")
        if not isinstance(v["seed"], int):
            raise ConfigError("seed must be an integer")
        if not (0.0 <= float(v["threshold"]) <= 1.0):
            raise ConfigError("threshold must be in [0, 1]")
        unknown = [m for m in v["eval_modes"] if m not in eval_harness.MODES]
        if unknown:
            raise ConfigError(f"unknown eval modes: {', '.join(unknown)}")
        if not v["mock"]:
            for name in ("completion", "embedding", "rerank"):
                if not v["clients"][name].get("base_url"):
                    raise ConfigError(
                        f"mock is off but clients.{name}.base_url is empty")

    def __getitem__(self, key):
        return self.values[key]

    def digest(self) -> str:
        # Directory locations do not change behaviour, so two runs pointed
        # at different work dirs still count as the same configuration.
        stripped = {k: v for k, v in self.values.items()
                    if k not in ("work_dir", "input_dir")}
        blob = json.dumps(stripped, sort_keys=True)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]

    @property
    def work_dir(self) -> Path:
        return Path(self.values["work_dir"])

    @property
    def input_dir(self) -> Path:
        if self.values["input_dir"]:
            return Path(self.values["input_dir"])
        return Path(str(resources.files("apicorpus").joinpath("data/minicorpus")))

    def completion_client(self):
        if self.values["mock"]:
            return MockCompletionClient()
        c = self.values["clients"]["completion"]
        return HttpCompletionClient(c["base_url"], c["model"],
                                    token_env=c.get("token_env", "APICORPUS_TOKEN"))

    def embedding_client(self):
        if self.values["mock"]:
            return MockEmbeddingClient(dim=self.values["clients"]["embedding"]
                                       .get("dim", 16))
        c = self.values["clients"]["embedding"]
        return HttpEmbeddingClient(c["base_url"], c["model"],
                                   token_env=c.get("token_env", "APICORPUS_TOKEN"))

    def rerank_client(self):
        if self.values["mock"]:
            return MockRerankClient()
        c = self.values["clients"]["rerank"]
        return HttpRerankClient(c["base_url"], c["model"],
                                token_env=c.get("token_env", "APICORPUS_TOKEN"))


def _file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()[:16]


def _manifest_path(cfg: PipelineConfig, stage: str) -> Path:
    return cfg.work_dir / "manifests" / f"{stage}.json"


def _write_manifest(cfg: PipelineConfig, stage: str, inputs: dict,
                    outputs: list, counts: dict):
    manifest = {
        "stage": stage,
        "tool_version": __version__,
        "seed": cfg["seed"],
        "config_digest": cfg.digest(),
        "inputs": inputs,
        "outputs": {p.name: _file_digest(p) for p in outputs},
        "counts": counts,
    }
    path = _manifest_path(cfg, stage)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return manifest


def _load_manifest(cfg: PipelineConfig, stage: str):
    path = _manifest_path(cfg, stage)
    if not path.exists():
        return None
    return json.loads(path.read_text(encoding="utf-8"))


def _stage_fresh(cfg: PipelineConfig, stage: str, inputs: dict,
                 output_paths: list) -> bool:
    manifest = _load_manifest(cfg, stage)
    if manifest is None:
        return False
    if manifest.get("config_digest") != cfg.digest():
        return False
    if manifest.get("inputs") != inputs:
        return False
    for path in output_paths:
        if not path.exists():
            return False
        if manifest.get("outputs", {}).get(path.name) != _file_digest(path):
            return False
    return True


def _require(cfg: PipelineConfig, stage: str, *paths: Path):
    missing = [str(p) for p in paths if not p.exists()]
    if missing:
        raise PreconditionError(
            f"{stage} needs {', '.join(missing)}; run the earlier stages first")


def _discover_specs(input_dir: Path):
    """Spec files with hub assignment from a manifest or directory names."""
    manifest_file = input_dir / "manifest.json"
    if manifest_file.exists():
        listed = json.loads(manifest_file.read_text(encoding="utf-8"))
        out = []
        for entry in listed.get("files", []):
            out.append({
                "path": input_dir / entry["path"],
                "hub": entry.get("hub", "other"),
                "snippets": entry.get("snippets") or {},
            })
        return out
    out = []
    for path in sorted(input_dir.rglob("*")):
        if path.suffix.lower() not in (".json", ".yaml", ".yml"):
            continue
        rel = path.relative_to(input_dir)
        hub = rel.parts[0] if len(rel.parts) > 1 and rel.parts[0] in HUBS else "other"
        out.append({"path": path, "hub": hub, "snippets": {}})
    return out


def stage_ingest(cfg: PipelineConfig, force: bool = False) -> dict:
    specs = _discover_specs(cfg.input_dir)
    if not specs:
        raise PreconditionError(f"no spec files under {cfg.input_dir}")
    inputs = {str(s["path"]): _file_digest(s["path"]) for s in specs}
    records_path = cfg.work_dir / "records.jsonl"
    sources_path = cfg.work_dir / "sources.json"
    if not force and _stage_fresh(cfg, "ingest", inputs, [records_path, sources_path]):
        return {"skipped": True}

    cfg.work_dir.mkdir(parents=True, exist_ok=True)
    counts = {
        "files_seen": 0, "files_kept": 0,
        "files_dropped": {"empty": 0, "non_english": 0, "malformed": 0,
                          "unsupported_version": 0},
        "records_seen": 0, "records_emitted": 0, "records_dropped": 0,
    }
    all_records = []
    sources = []
    for entry in specs:
        counts["files_seen"] += 1
        source_id = str(entry["path"])
        try:
            spec = parse_spec(entry["path"].read_bytes(), source_id=source_id,
                              hub=entry["hub"])
        except MalformedDocument:
            counts["files_dropped"]["malformed"] += 1
            continue
        except UnsupportedVersion:
            counts["files_dropped"]["unsupported_version"] += 1
            continue
        reason = filter_spec(spec, cfg["min_latin_fraction"])
        if reason is not None:
            counts["files_dropped"][reason] += 1
            continue
        counts["files_kept"] += 1
        records, report = extract_records(spec)
        counts["records_seen"] += report.records_seen
        counts["records_dropped"] += report.records_dropped_incomplete
        counts["records_emitted"] += len(records)
        first = len(all_records)
        all_records.extend(records)
        sources.append({
            "path": source_id,
            "hub": entry["hub"],
            "snippets": entry["snippets"],
            "record_indexes": list(range(first, first + len(records))),
        })

    tmp = str(records_path) + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        for record in all_records:
            fh.write(json.dumps(record.to_dict(), ensure_ascii=False,
                                separators=(",", ":")) + "\n")
    os.replace(tmp, records_path)
    sources_path.write_text(
        json.dumps({"sources": sources}, indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    _write_manifest(cfg, "ingest", inputs, [records_path, sources_path], counts)
    return counts


def _read_records(path: Path):
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(EndpointRecord(**json.loads(line)))
    return records


def stage_builddb(cfg: PipelineConfig, force: bool = False) -> dict:
    records_path = cfg.work_dir / "records.jsonl"
    sources_path = cfg.work_dir / "sources.json"
    _require(cfg, "builddb", records_path, sources_path)
    inputs = {p.name: _file_digest(p) for p in (records_path, sources_path)}
    db_path = cfg.work_dir / "db.jsonl"
    if not force and _stage_fresh(cfg, "builddb", inputs, [db_path]):
        return {"skipped": True}

    records = _read_records(records_path)
    sources = json.loads(sources_path.read_text(encoding="utf-8"))["sources"]
    instances = []
    rendered = 0
    supplied = 0
    for source in sources:
        spec = parse_spec(Path(source["path"]).read_bytes(),
                          source_id=source["path"], hub=source["hub"])
        for idx in source["record_indexes"]:
            record = records[idx]
            presupplied = source["snippets"].get(record.endpoint_name, {})
            template = build_template(record, spec,
                                      depth_limit=cfg["depth_limit"])
            for lang in cfg["languages"]:
                if lang in presupplied:
                    code = presupplied[lang]
                    supplied += 1
                else:
                    code = render_snippet(template, lang).code
                    rendered += 1
                instances.append(DatasetInstance(
                    record=record, api_call=code, lang=lang,
                    hub=source["hub"]))
    write_corpus(instances, db_path)
    counts = {"instances": len(instances), "rendered": rendered,
              "presupplied": supplied}
    _write_manifest(cfg, "builddb", inputs, [db_path], counts)
    return counts


def _unique_records(instances):
    seen = {}
    for instance in instances:
        key = record_key(instance.record)
        if key not in seen:
            seen[key] = instance.record
    return seen


def stage_instruct(cfg: PipelineConfig, force: bool = False) -> dict:
    db_path = cfg.work_dir / "db.jsonl"
    _require(cfg, "instruct", db_path)
    inputs = {db_path.name: _file_digest(db_path)}
    out_path = cfg.work_dir / "candidates.json"
    if not force and _stage_fresh(cfg, "instruct", inputs, [out_path]):
        return {"skipped": True}

    instances = read_corpus(db_path)
    records = list(_unique_records(instances).values())
    client = cfg.completion_client()
    retry = cfg["retry"]
    results, refine_stats, failures = instruct_pipeline.run_instruction_stage(
        records, client, seed=cfg["seed"],
        per_api=cfg["per_api_examples"],
        attempts=retry["attempts"], backoff=retry["backoff"])
    payload = {
        "results": {
            key: {
                "candidates": [c.to_dict() for c in r["candidates"]],
                "instruction": r["instruction"],
                "instruction_test": r["instruction_test"],
                "under_generated": r["under_generated"],
                "rejected": r["rejected"],
            }
            for key, r in sorted(results.items())
        },
        "failures": sorted(failures),
        "refine": {"retries": refine_stats.retries,
                   "fallbacks": refine_stats.fallbacks,
                   "failures": sorted(refine_stats.failures)},
    }
    out_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
    counts = {"records": len(records),
              "instructed": len(results),
              "rejected": sum(1 for r in results.values() if r["rejected"]),
              "failed": len(failures)}
    _write_manifest(cfg, "instruct", inputs, [out_path], counts)
    return counts


def stage_validate(cfg: PipelineConfig, force: bool = False) -> dict:
    db_path = cfg.work_dir / "db.jsonl"
    _require(cfg, "validate", db_path)
    inputs = {db_path.name: _file_digest(db_path)}
    report_path = cfg.work_dir / "validation.jsonl"
    kept_path = cfg.work_dir / "validated.jsonl"
    if not force and _stage_fresh(cfg, "validate", inputs,
                                  [report_path, kept_path]):
        return {"skipped": True}

    instances = read_corpus(db_path)
    kept = []
    lines = []
    for instance in instances:
        snippet = ApiCallSnippet(lang=instance.lang, code=instance.api_call,
                                 template_hash="")
        report = validate_api_call(snippet, instance.record)
        lines.append(json.dumps({
            "record": record_key(instance.record),
            "lang": instance.lang,
            "endpoint_match": report.endpoint_match,
            "method_match": report.method_match,
            "url_valid": report.url_valid,
            "lang_keywords_ok": report.lang_keywords_ok,
            "overall": report.overall,
            "failures": report.failures,
        }, ensure_ascii=False, separators=(",", ":")))
        if report.overall:
            kept.append(instance)
    tmp = str(report_path) + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + ("\n" if lines else ""))
    os.replace(tmp, report_path)
    write_corpus(kept, kept_path)
    counts = {"checked": len(instances), "passed": len(kept),
              "failed": len(instances) - len(kept)}
    _write_manifest(cfg, "validate", inputs, [report_path, kept_path], counts)
    return counts


def stage_select(cfg: PipelineConfig, force: bool = False) -> dict:
    kept_path = cfg.work_dir / "validated.jsonl"
    cand_path = cfg.work_dir / "candidates.json"
    _require(cfg, "select", kept_path, cand_path)
    inputs = {p.name: _file_digest(p) for p in (kept_path, cand_path)}
    corpus_path = cfg.work_dir / "corpus.jsonl"
    if not force and _stage_fresh(cfg, "select", inputs, [corpus_path]):
        return {"skipped": True}

    instances = read_corpus(kept_path)
    payload = json.loads(cand_path.read_text(encoding="utf-8"))["results"]
    out = []
    dropped = 0
    for instance in instances:
        result = payload.get(record_key(instance.record))
        if result is None:
            dropped += 1
            continue
        out.append(DatasetInstance(
            record=instance.record,
            api_call=instance.api_call,
            lang=instance.lang,
            instruction_candidates=[
                instruct_pipeline.InstructionCandidate.from_dict(c)
                for c in result["candidates"]
            ],
            instruction=result["instruction"],
            instruction_test=result["instruction_test"],
            hub=instance.hub,
        ))
    write_corpus(out, corpus_path)
    counts = {
        "instances": len(out),
        "dropped_no_instructions": dropped,
        "selected": sum(1 for i in out if i.instruction_test != "None"),
        "train_only": sum(1 for i in out if i.instruction_test == "None"),
    }
    _write_manifest(cfg, "select", inputs, [corpus_path], counts)
    return counts


def stage_split(cfg: PipelineConfig, force: bool = False) -> dict:
    corpus_path = cfg.work_dir / "corpus.jsonl"
    _require(cfg, "split", corpus_path)
    inputs = {corpus_path.name: _file_digest(corpus_path)}
    out_paths = {name: cfg.work_dir / f"{name}.jsonl"
                 for name in ("train", "level1", "level2", "level3")}
    if not force and _stage_fresh(cfg, "split", inputs, list(out_paths.values())):
        return {"skipped": True}

    corpus = read_corpus(corpus_path)
    result = split_levels(corpus, mode=cfg["split_mode"])
    write_corpus(result.train, out_paths["train"])
    write_corpus(result.level1, out_paths["level1"])
    write_corpus(result.level2, out_paths["level2"])
    write_corpus(result.level3, out_paths["level3"])
    counts = dict(result.counts())
    counts.update({"mode": cfg["split_mode"], "window": result.window,
                   "l3_start": result.l3_start, "cap": dataset_store.LEVEL_CAP})
    _write_manifest(cfg, "split", inputs, list(out_paths.values()), counts)
    return counts


def stage_eval(cfg: PipelineConfig, force: bool = False) -> dict:
    paths = {name: cfg.work_dir / f"{name}.jsonl"
             for name in ("train", "level1", "level2", "level3")}
    _require(cfg, "eval", *paths.values())
    inputs = {p.name: _file_digest(p) for p in paths.values()}
    out_path = cfg.work_dir / "eval_report.json"
    if not force and _stage_fresh(cfg, "eval", inputs, [out_path]):
        return {"skipped": True}

    train = read_corpus(paths["train"])
    levels = {n: read_corpus(paths[f"level{n}"]) for n in (1, 2, 3)}
    embed_client = cfg.embedding_client()
    rerank_client = cfg.rerank_client()
    generator = cfg.completion_client()
    index = eval_harness.build_index(train, embed_client) if train else None

    rows = []
    for level, instances in sorted(levels.items()):
        if not instances or index is None:
            continue
        for mode in cfg["eval_modes"]:
            if mode == "three_reranked" and len(index) < 5:
                continue
            if mode != "zero_shot" and len(index) < 3:
                continue
            report = eval_harness.run_eval(
                instances, mode, index, generator,
                embed_client=embed_client, rerank_client=rerank_client,
                level=level, seed=cfg["seed"], threshold=cfg["threshold"])
            rows.append(report.summary())
    out_path.write_text(json.dumps({"rows": rows}, indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
    counts = {"rows": len(rows)}
    _write_manifest(cfg, "eval", inputs, [out_path], counts)
    return counts


def _format_table(headers, rows) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(str(cell)))
    def line(cells):
        return "  ".join(str(c).ljust(w) for c, w in zip(cells, widths)).rstrip()
    return "\n".join([line(headers)] + [line(r) for r in rows])


def stage_report(cfg: PipelineConfig, force: bool = False) -> dict:
    needed = ("ingest", "builddb", "instruct", "validate", "select", "split")
    manifests = {}
    for stage in needed:
        manifest = _load_manifest(cfg, stage)
        if manifest is None:
            raise PreconditionError(f"report needs the {stage} manifest")
        manifests[stage] = manifest
    eval_manifest = _load_manifest(cfg, "eval")

    inputs = {f"{s}.manifest": hashlib.sha256(
        json.dumps(manifests[s], sort_keys=True).encode()).hexdigest()[:16]
        for s in needed}
    json_path = cfg.work_dir / "report.json"
    txt_path = cfg.work_dir / "report.txt"
    if not force and _stage_fresh(cfg, "report", inputs, [json_path, txt_path]):
        return {"skipped": True}

    c = {s: manifests[s]["counts"] for s in needed}
    progress = [
        ("files seen", c["ingest"]["files_seen"]),
        ("files kept", c["ingest"]["files_kept"]),
        ("endpoint records", c["ingest"]["records_emitted"]),
        ("instances rendered", c["builddb"]["instances"]),
        ("instances validated", c["validate"]["passed"]),
        ("instances in corpus", c["select"]["instances"]),
        ("instances with test instruction", c["select"]["selected"]),
    ]
    split_counts = {k: c["split"][k] for k in ("train", "level1", "level2", "level3")}

    payload = {
        "tool_version": __version__,
        "seed": cfg["seed"],
        "config_digest": cfg.digest(),
        "progress": dict(progress),
        "split": split_counts,
        "split_mode": c["split"]["mode"],
    }
    if eval_manifest is not None and (cfg.work_dir / "eval_report.json").exists():
        payload["eval"] = json.loads(
            (cfg.work_dir / "eval_report.json").read_text(encoding="utf-8"))["rows"]

    text = ["Pipeline progress", "",
            _format_table(["stage", "count"], progress), "",
            "Split", "",
            _format_table(["split", "count"], sorted(split_counts.items()))]
    if "eval" in payload:
        eval_rows = [
            (r["level"], r["mode"], r["n"],
             f"{r['endpoint_accuracy']:.3f}", f"{r['api_call_accuracy']:.3f}")
            for r in payload["eval"]
        ]
        text += ["", "Evaluation (intent/endpoint and api call accuracy)", "",
                 _format_table(["level", "mode", "n", "endpoint", "api_call"],
                               eval_rows)]
    json_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                         encoding="utf-8")
    txt_path.write_text("\n".join(text) + "\n", encoding="utf-8")
    _write_manifest(cfg, "report", inputs, [json_path, txt_path],
                    {"stages": len(needed)})
    return {"written": str(txt_path)}


_STAGE_FUNCS = {
    "ingest": stage_ingest,
    "builddb": stage_builddb,
    "instruct": stage_instruct,
    "validate": stage_validate,
    "select": stage_select,
    "split": stage_split,
    "eval": stage_eval,
    "report": stage_report,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="apicorpus",
        description="Build and evaluate an API-call instruction corpus "
                    "from OpenAPI documents.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="YAML config file")
        p.add_argument("--force", action="store_true",
                       help="rerun even when outputs are up to date")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--mock-llm", action="store_true",
                       help="use the deterministic offline clients")
        p.add_argument("--languages",
                       help="comma-separated subset of snippet languages")
        p.add_argument("--split-mode", choices=("strict", "scaled"))
        p.add_argument("--work-dir", help="override the work directory")
        p.add_argument("--input-dir", help="override the spec input directory")

    for name in STAGES:
        add_common(sub.add_parser(name, help=f"run the {name} stage"))
    run = sub.add_parser("run", help="run all stages in order")
    add_common(run)
    run.add_argument("--stage", choices=STAGES,
                     help="run only this stage")
    return parser


def _config_from_args(args) -> PipelineConfig:
    overrides = {
        "seed": args.seed,
        "split_mode": args.split_mode,
        "work_dir": args.work_dir,
        "input_dir": args.input_dir,
    }
    if args.mock_llm:
        overrides["mock"] = True
    if args.languages:
        overrides["languages"] = [s.strip() for s in args.languages.split(",")
                                  if s.strip()]
    return PipelineConfig.load(args.config, overrides)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        if args.command == "run":
            stages = [args.stage] if args.stage else list(STAGES)
        else:
            stages = [args.command]
        for stage in stages:
            counts = _STAGE_FUNCS[stage](cfg, force=args.force)
            if counts.get("skipped"):
                print(f"{stage}: up to date, skipped")
            else:
                shown = {k: v for k, v in counts.items() if k != "skipped"}
                print(f"{stage}: " + json.dumps(shown, sort_keys=True))
        return EXIT_OK
    except ConfigError as exc:
        print(json.dumps({"error": "config", "detail": str(exc)}),
              file=sys.stderr)
        return EXIT_CONFIG
    except (PreconditionError, CorpusTooSmall) as exc:
        print(json.dumps({"error": "precondition", "detail": str(exc)}),
              file=sys.stderr)
        return EXIT_PRECONDITION
    except ServiceError as exc:
        print(json.dumps({"error": "service", "detail": str(exc)}),
              file=sys.stderr)
        return EXIT_SERVICE
    except ApicorpusError as exc:
        print(json.dumps({"error": type(exc).__name__, "detail": str(exc)}),
              file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
