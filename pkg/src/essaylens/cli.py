"""Command-line gateway.

Subcommands: embed, hypergen show, train, evaluate, reduce-sweep, score,
analyze, serve. Exit codes: 0 success, 1 usage error, 2 data error. Report
paths write matplotlib figures next to their JSON/text outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from . import gateway
from .corpus import (CorpusError, default_sets, load_sets_json, make_folds,
                     mean_class_count, parse_asap_tsv)
from .embeddings import (EmbeddedDocument, EmbeddingError, attach_embeddings,
                         provider_from_id, read_embedding_file,
                         segment_sentences, write_embedding_file)
from .evaluation import EvaluationError, QwkTable, cross_validate, reduced_data_sweep
from .hypergen import HypergenConfig, generate_hyperparams
from .scorers import (CorruptContainer, DegenerateFold, InvalidSpec,
                      MODEL_KINDS, ModelSpec, UnembeddedRecord, VersionMismatch,
                      build_model, fit_passage_context, load_model, save_model,
                      train as train_model)

DATA_ERRORS = (CorpusError, EmbeddingError, EvaluationError, gateway.GatewayError,
               CorruptContainer, VersionMismatch, InvalidSpec, DegenerateFold,
               UnembeddedRecord, FileNotFoundError, IsADirectoryError,
               PermissionError, ValueError)


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage problems; the CLI contract reserves 2 for
    data errors, so remap usage failures to exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="essaylens",
                     description="Essay scoring over sentence embeddings")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p_embed = sub.add_parser("embed", help="embed a corpus TSV into JSONL")
    p_embed.add_argument("--tsv", required=True, help="corpus TSV path")
    p_embed.add_argument("--out", required=True, help="embedding JSONL path")
    p_embed.add_argument("--set", type=int, help="restrict to one essay set")
    p_embed.add_argument("--provider", help="provider id (hashed-d{dim}-s{seed})")
    p_embed.add_argument("--seed", type=int, help="hashed provider seed")
    p_embed.add_argument("--dim", type=int, help="hashed provider dimension")
    p_embed.add_argument("--sets-file", help="essay-set metadata JSON")
    p_embed.add_argument("--config", help="config JSON path")

    p_hyper = sub.add_parser("hypergen", help="metadata-driven hyperparameters")
    hyper_sub = p_hyper.add_subparsers(dest="hypergen_command", metavar="ACTION")
    p_show = hyper_sub.add_parser("show", help="print generated hyperparameters")
    p_show.add_argument("--set", type=int, required=True)
    p_show.add_argument("--sets-file", help="essay-set metadata JSON")
    p_show.add_argument("--hypergen-config", help="hypergen table overrides JSON")

    p_train = sub.add_parser("train", help="train one scorer on one fold")
    p_train.add_argument("--tsv", required=True)
    p_train.add_argument("--embeddings", required=True)
    p_train.add_argument("--set", type=int, required=True)
    p_train.add_argument("--out", required=True, help="model output path (.elm)")
    p_train.add_argument("--model-kind", default="mha", choices=MODEL_KINDS)
    p_train.add_argument("--seed", type=int)
    p_train.add_argument("--fold", type=int, default=0, choices=range(5))
    p_train.add_argument("--sets-file")
    p_train.add_argument("--hypergen-config")
    p_train.add_argument("--passage-file", help="source passage (passage_conditioned)")
    p_train.add_argument("--config")

    p_eval = sub.add_parser("evaluate", help="5-fold cross-validation report")
    p_eval.add_argument("--tsv", required=True)
    p_eval.add_argument("--embeddings", required=True)
    p_eval.add_argument("--set", type=int, action="append", required=True,
                        help="essay set id (repeatable)")
    p_eval.add_argument("--model-kind", default="mha", choices=MODEL_KINDS)
    p_eval.add_argument("--seed", type=int)
    p_eval.add_argument("--out", help="report directory")
    p_eval.add_argument("--sets-file")
    p_eval.add_argument("--hypergen-config")
    p_eval.add_argument("--config")

    p_sweep = sub.add_parser("reduce-sweep",
                             help="cross-validation at reduced training fractions")
    p_sweep.add_argument("--tsv", required=True)
    p_sweep.add_argument("--embeddings", required=True)
    p_sweep.add_argument("--set", type=int, required=True)
    p_sweep.add_argument("--fraction", type=float, action="append", required=True)
    p_sweep.add_argument("--model-kind", default="mha", choices=MODEL_KINDS)
    p_sweep.add_argument("--seed", type=int)
    p_sweep.add_argument("--out", help="report directory")
    p_sweep.add_argument("--sets-file")
    p_sweep.add_argument("--hypergen-config")
    p_sweep.add_argument("--config")

    p_score = sub.add_parser("score", help="score one essay with a saved model")
    p_score.add_argument("--model", required=True, help="model file path")
    p_score.add_argument("--essay-file", required=True)
    p_score.add_argument("--provider")
    p_score.add_argument("--config")

    p_an = sub.add_parser("analyze", help="similarity analysis of essay vs passage")
    p_an.add_argument("--passage-file", required=True)
    p_an.add_argument("--essay-file", required=True)
    p_an.add_argument("--prompt-file")
    p_an.add_argument("--model", help="model file path (optional)")
    p_an.add_argument("--provider")
    p_an.add_argument("--tau", type=float)
    p_an.add_argument("--config")

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--port", type=int)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--models-dir")
    p_serve.add_argument("--config")

    return parser


def _read_text(path: str) -> str:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    return p.read_text(encoding="utf-8")


def _load_sets(args):
    if getattr(args, "sets_file", None):
        return load_sets_json(args.sets_file)
    return default_sets()


def _hypergen_config(args) -> HypergenConfig:
    path = getattr(args, "hypergen_config", None)
    if path:
        with open(path, encoding="utf-8") as fh:
            return HypergenConfig.from_json(fh.read())
    return HypergenConfig()


def _provider_from_args(args, config) -> str:
    provider_id = gateway.setting("provider", getattr(args, "provider", None),
                                  config)
    seed = getattr(args, "seed", None)
    dim = getattr(args, "dim", None)
    if seed is None and dim is None:
        return provider_id
    base = provider_from_id(provider_id)
    return provider_from_id(
        f"hashed-d{dim if dim is not None else base.dim}"
        f"-s{seed if seed is not None else base.seed}").provider_id


def _load_corpus(args, sets, set_id):
    records = [r for r in parse_asap_tsv(args.tsv, sets) if r.set_id == set_id]
    if not records:
        raise CorpusError(f"no records for essay set {set_id} in {args.tsv}")
    documents = read_embedding_file(args.embeddings)
    by_id = {d.doc_id for d in documents}
    records = [r for r in records if r.essay_id in by_id]
    if not records:
        raise EmbeddingError("no overlap between corpus and embedding file")
    attach_embeddings(records, documents)
    provider_id = documents[0].provider
    return records, provider_id


# ---------------------------------------------------------------------------
# Command implementations
# ---------------------------------------------------------------------------

def _cmd_embed(args) -> int:
    config = gateway.load_config_file(args.config)
    sets = _load_sets(args)
    provider = provider_from_id(_provider_from_args(args, config))
    records = parse_asap_tsv(args.tsv, sets)
    if args.set is not None:
        records = [r for r in records if r.set_id == args.set]
        if not records:
            raise CorpusError(f"no records for essay set {args.set}")
    documents = []
    for record in records:
        split = segment_sentences(record.text)
        documents.append(EmbeddedDocument(
            doc_id=record.essay_id, sentences=list(split.sentences),
            vectors=provider.embed(split.sentences),
            provider=provider.provider_id))
    write_embedding_file(documents, args.out)
    print(f"embedded {len(documents)} documents -> {args.out}")
    return 0


def _cmd_hypergen_show(args) -> int:
    sets = _load_sets(args)
    meta = sets.get(args.set)
    if meta is None:
        raise CorpusError(f"unknown essay set {args.set}")
    hp = generate_hyperparams(meta, mean_class_count(sets), _hypergen_config(args))
    print(hp.to_json())
    return 0


def _cmd_train(args) -> int:
    config = gateway.load_config_file(args.config)
    sets = _load_sets(args)
    meta = sets.get(args.set)
    if meta is None:
        raise CorpusError(f"unknown essay set {args.set}")
    records, provider_id = _load_corpus(args, sets, args.set)
    seed = int(gateway.setting("seed", args.seed, config))
    hp_cfg = _hypergen_config(args)
    hp = generate_hyperparams(meta, mean_class_count(sets), hp_cfg)
    hp = type(hp)(**{**asdict(hp), "seed": seed})
    input_dim = records[0].embedding.shape[1]
    spec = ModelSpec(kind=args.model_kind, hyper=hp, input_dim=input_dim,
                     n_classes=meta.n_classes, score_min=meta.score_min,
                     score_max=meta.score_max)
    fold = make_folds(len(records), seed).folds[args.fold]
    model = build_model(spec, seed)
    if args.model_kind == "passage_conditioned":
        passage_text = meta.passage
        if args.passage_file:
            passage_text = _read_text(args.passage_file)
        if not passage_text:
            raise CorpusError(
                "passage_conditioned training needs --passage-file or passage "
                "text in the essay-set metadata")
        provider = provider_from_id(provider_id)
        passage_split = segment_sentences(passage_text)
        fit_passage_context(model, records, fold.train,
                            provider.embed(passage_split.sentences),
                            list(passage_split.sentences))
    best, report = train_model(model, records, fold, hp)
    best.provenance["provider"] = provider_id
    best.provenance["set_id"] = args.set
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(save_model(best))

    report_path = out.with_suffix(out.suffix + ".report.json")
    report_path.write_text(json.dumps({
        "model": str(out), "set_id": args.set, "kind": args.model_kind,
        "seed": seed, "fold": args.fold,
        "train_loss": report.train_loss, "dev_loss": report.dev_loss,
        "dev_qwk": report.dev_qwk, "best_epoch": report.best_epoch,
        "epochs_run": report.epochs_run, "stop_reason": report.stop_reason,
    }, indent=2), encoding="utf-8")
    from .reports import save_training_curves
    figure_path = save_training_curves(
        report, str(out.with_suffix(out.suffix + ".training.png")),
        title=f"{args.model_kind} / set {args.set}")
    print(f"model -> {out}")
    print(f"report -> {report_path}")
    print(f"figure -> {figure_path}")
    print(f"best dev QWK {max(report.dev_qwk):.4f} at epoch {report.best_epoch}")
    return 0


def _cmd_evaluate(args) -> int:
    config = gateway.load_config_file(args.config)
    sets = _load_sets(args)
    seed = int(gateway.setting("seed", args.seed, config))
    hp_cfg = _hypergen_config(args)
    mean_classes = mean_class_count(sets)

    per_set = {}
    detail = {}
    for set_id in args.set:
        meta = sets.get(set_id)
        if meta is None:
            raise CorpusError(f"unknown essay set {set_id}")
        records, _ = _load_corpus(args, sets, set_id)
        hp = generate_hyperparams(meta, mean_classes, hp_cfg)
        hp = type(hp)(**{**asdict(hp), "seed": seed})
        cv = cross_validate(args.model_kind, records, meta, seed, hp=hp)
        per_set[set_id] = cv.mean_qwk
        detail[set_id] = [vars(f) for f in cv.fold_results]

    table = QwkTable()
    table.add_row(args.model_kind, per_set)
    print(table.to_text(set_ids=sorted(per_set)))

    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(json.dumps({
            "table": json.loads(table.to_json()),
            "folds": {str(k): v for k, v in detail.items()},
            "seed": seed, "model_kind": args.model_kind,
        }, indent=2), encoding="utf-8")
        (out / "report.txt").write_text(
            table.to_text(set_ids=sorted(per_set)) + "\n", encoding="utf-8")
        from .reports import save_qwk_bars
        save_qwk_bars(per_set, str(out / "qwk.png"),
                      title=f"{args.model_kind}: QWK by essay set")
        print(f"report -> {out}/report.json, report.txt, qwk.png")
    return 0


def _cmd_reduce_sweep(args) -> int:
    config = gateway.load_config_file(args.config)
    sets = _load_sets(args)
    meta = sets.get(args.set)
    if meta is None:
        raise CorpusError(f"unknown essay set {args.set}")
    seed = int(gateway.setting("seed", args.seed, config))
    records, _ = _load_corpus(args, sets, args.set)
    hp = generate_hyperparams(meta, mean_class_count(sets), _hypergen_config(args))
    hp = type(hp)(**{**asdict(hp), "seed": seed})
    sweep = reduced_data_sweep(args.model_kind, records, meta, args.fraction,
                               seed, hp=hp)
    points = [(frac, cv.mean_qwk) for frac, cv in sweep]
    print("fraction\tmean_qwk")
    for frac, qwk in points:
        print(f"{frac:g}\t{qwk:.4f}")

    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "sweep.json").write_text(json.dumps({
            "set_id": args.set, "model_kind": args.model_kind, "seed": seed,
            "points": [{"fraction": f, "mean_qwk": q} for f, q in points],
        }, indent=2), encoding="utf-8")
        (out / "sweep.tsv").write_text(
            "fraction\tmean_qwk\n" +
            "".join(f"{f:g}\t{q:.6f}\n" for f, q in points), encoding="utf-8")
        from .reports import save_sweep_curve
        save_sweep_curve(points, str(out / "sweep.png"),
                         title=f"{args.model_kind} / set {args.set}")
        print(f"report -> {out}/sweep.json, sweep.tsv, sweep.png")
    return 0


def _cmd_score(args) -> int:
    config = gateway.load_config_file(args.config)
    model_path = Path(args.model)
    if not model_path.is_file():
        raise FileNotFoundError(f"no such file: {args.model}")
    model = load_model(model_path.read_bytes())
    essay = _read_text(args.essay_file)
    payload = gateway.score_payload(
        model, essay, provider_id=args.provider,
        default_provider_id=str(gateway.setting("provider", None, config)))
    print(json.dumps(payload, indent=2))
    return 0


def _cmd_analyze(args) -> int:
    config = gateway.load_config_file(args.config)
    passage = _read_text(args.passage_file)
    essay = _read_text(args.essay_file)
    if not passage.strip() or not essay.strip():
        raise gateway.GatewayError("passage and essay must be non-empty")
    prompt = _read_text(args.prompt_file) if args.prompt_file else None
    model = None
    if args.model:
        model_path = Path(args.model)
        if not model_path.is_file():
            raise FileNotFoundError(f"no such file: {args.model}")
        model = load_model(model_path.read_bytes())
    tau = float(gateway.setting("tau", args.tau, config))
    payload = gateway.analyze_payload(
        passage, essay, prompt_text=prompt, model=model,
        provider_id=args.provider, tau=tau,
        default_provider_id=str(gateway.setting("provider", None, config)))
    print(json.dumps(payload, indent=2))
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app
    config = gateway.load_config_file(args.config)
    port = int(gateway.setting("port", args.port, config))
    models_dir = str(gateway.setting("models_dir", args.models_dir, config))
    tau = float(gateway.setting("tau", None, config))
    provider = str(gateway.setting("provider", None, config))
    app = create_app(ServiceConfig(models_dir=models_dir, tau=tau,
                                   default_provider=provider))
    uvicorn.run(app, host=args.host, port=port)
    return 0


_COMMANDS = {
    "embed": _cmd_embed,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "reduce-sweep": _cmd_reduce_sweep,
    "score": _cmd_score,
    "analyze": _cmd_analyze,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    if args.command == "hypergen":
        if getattr(args, "hypergen_command", None) != "show":
            parser.print_usage(sys.stderr)
            return 1
        handler = _cmd_hypergen_show
    else:
        handler = _COMMANDS[args.command]
    try:
        return handler(args)
    except DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
