#!/usr/bin/env python3
"""
Zero-shot toolkit CLI

Evaluate, sweep, analyze and inspect transductive zero-shot models from a
run-configuration file plus flag overrides.
"""
import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from dotenv import load_dotenv

from .analysis.affinity import affinity_report, classname_affinity, correlation_affinity_agreement
from .analysis.export import export_projections
from .analysis.subsets import related_subset_curve
from .analysis.transfer import correlation_frame, records_from_report, transfer_correlation
from .config import RunConfig, configure_logging, load_run_config
from .dataio.base import Dataset, SyntheticSpec, ZeroShotSplit
from .dataio.loaders import load_dataset, write_dataset
from .dataio.splits import generate_splits
from .dataio.synthetic import generate_synthetic
from .error_handler import ConfigError, ErrorHandler, MetricError, ParameterError
from .evaluation.reports import read_report, write_report
from .evaluation.runner import ExperimentConfig, fit_split_model, run_experiment
from .graph import build_knn_graph, write_edge_list
from .inference.factory import MatcherFactory
from .inference.matching import distance_matrix, write_predictions
from .inference.self_training import self_train
from .regression.serialization import dump_model, load_model
from .regression.solvers import project
from .sweep import parse_grid_spec, run_sweep
from .wordvec import make_embedding_source, write_word_vectors

logger = structlog.get_logger(__name__)

RESOLVED_CONFIG = "resolved_config.json"
ERROR_FILE = "error.json"

# argparse dest -> dotted config key
OVERRIDE_FLAGS = {
    "features": "data.features",
    "labels": "data.labels",
    "no_normalize": "data.normalize_features",
    "embedding_mode": "embedding.mode",
    "word_vectors": "embedding.word_vectors",
    "attributes": "embedding.attributes",
    "variant": "model.variant",
    "gamma_a": "model.gamma_a",
    "gamma_i": "model.gamma_i",
    "graph_k": "model.graph_k",
    "graph_weighting": "model.graph_weighting",
    "heat_bandwidth": "model.heat_bandwidth",
    "matcher": "inference.matcher",
    "self_train": "inference.self_train",
    "self_train_k": "inference.self_train_k",
    "metric": "evaluation.metric",
    "splits": "evaluation.n_splits",
    "seed": "evaluation.seed",
    "distractors": "evaluation.distractors_per_class",
    "subsample": "evaluation.subsample",
    "output": "output.directory",
    "retain_predictions": "output.retain_predictions",
    "record_runtime": "output.record_runtime",
    "workers": "runtime.workers",
}


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--config', help='Run configuration file (TOML or JSON)')
    parser.add_argument('--features', help='Feature file (binary ZSLF or CSV)')
    parser.add_argument('--labels', help='Label file, one class name per line')
    parser.add_argument('--no-normalize', action='store_const', const=False, default=None,
                        help='Disable per-row L2 feature normalization')
    parser.add_argument('--embedding-mode', choices=['word-vector', 'attribute-file', 'concatenated'])
    parser.add_argument('--word-vectors', help='Word-vector text file')
    parser.add_argument('--attributes', help='Per-class attribute CSV')
    parser.add_argument('--variant', choices=['ridge', 'manifold'])
    parser.add_argument('--gamma-a', type=float, help='Ridge weight (default: 1e-6)')
    parser.add_argument('--gamma-i', type=float, help='Manifold weight (default: 40)')
    parser.add_argument('--graph-k', type=int, help='KNN graph neighbours (default: 5)')
    parser.add_argument('--graph-weighting', choices=['binary', 'heat'])
    parser.add_argument('--heat-bandwidth', type=float)
    parser.add_argument('--matcher', choices=['nn', 'nrm', 'gc'])
    parser.add_argument('--self-train', action=argparse.BooleanOptionalAction, default=None)
    parser.add_argument('--self-train-k', type=int, help='Self-training neighbours (default: 100)')
    parser.add_argument('--metric', choices=['accuracy', 'map', 'auc'])
    parser.add_argument('--splits', type=int, help='Number of class splits (default: 50)')
    parser.add_argument('--seed', type=int, help='Base seed (default: 0)')
    parser.add_argument('--distractors', type=int, help='Held-out instances per training class')
    parser.add_argument('--subsample', action='append', metavar='CLASS=PERCENT',
                        help='Subsample a test class to PERCENT%% (repeatable)')
    parser.add_argument('--output', help='Output directory')
    parser.add_argument('--retain-predictions', action='store_const', const=True, default=None)
    parser.add_argument('--record-runtime', action='store_const', const=True, default=None)
    parser.add_argument('--workers', type=int, help='Worker threads (default: $ZSL_THREADS or 1)')


def _parse_subsample(entries: Optional[List[str]]) -> Optional[Dict[str, float]]:
    if not entries:
        return None
    fractions = {}
    for entry in entries:
        name, sep, pct = entry.rpartition("=")
        if not sep or not name:
            raise ConfigError(f"--subsample expects CLASS=PERCENT, got {entry!r}")
        try:
            fractions[name] = float(pct)
        except ValueError as e:
            raise ConfigError(f"--subsample percentage must be a number, got {pct!r}") from e
    return fractions


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge flags over the config file, environment and defaults."""
    overrides: Dict[str, Any] = {}
    for dest, dotted in OVERRIDE_FLAGS.items():
        value = getattr(args, dest, None)
        if dest == "subsample":
            value = _parse_subsample(value)
        if value is not None:
            overrides[dotted] = value
    return load_run_config(getattr(args, "config", None), overrides)


def load_context(config: RunConfig) -> Tuple[Dataset, List[Dataset], Any]:
    """Load the target dataset, auxiliary datasets and the class-matrix builder."""
    if not config.data.features or not config.data.labels:
        raise ConfigError("data.features and data.labels are required")
    dataset = load_dataset(config.data.features, config.data.labels,
                           normalize=config.data.normalize_features, name=config.data.name)
    aux = [load_dataset(a.features, a.labels, normalize=config.data.normalize_features, name=a.name)
           for a in config.data.aux]
    source = make_embedding_source(config.embedding.mode, config.embedding.word_vectors,
                                   config.embedding.attributes)
    return dataset, aux, source.builder()


def _write_resolved(config: RunConfig, directory: Path) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    (directory / RESOLVED_CONFIG).write_text(config.to_json() + "\n", encoding="utf-8")


def _select_split(dataset: Dataset, config: RunConfig, split_id: int) -> ZeroShotSplit:
    splits = generate_splits(dataset.n_classes, config.evaluation.n_splits, config.evaluation.seed)
    if not 0 <= split_id < len(splits):
        raise ParameterError(f"split id {split_id} out of range [0, {len(splits)})")
    return splits[split_id]


def cmd_eval(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    output_dir = Path(config.output.directory)
    args.output_dir = output_dir
    _write_resolved(config, output_dir)

    dataset, aux, builder = load_context(config)
    report = run_experiment(dataset, ExperimentConfig.from_run_config(config), builder, aux)
    write_report(report, output_dir, include_runtime=config.output.record_runtime)
    print(json.dumps({"metric": report.metric, "mean": report.mean, "std": report.std,
                      "splits": len(report.per_split)}, sort_keys=True))
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    output_dir = Path(config.output.directory)
    args.output_dir = output_dir
    grid = dict(parse_grid_spec(spec) for spec in args.grid)
    _write_resolved(config, output_dir)

    dataset, aux, builder = load_context(config)

    def run_cell(cell_config: RunConfig):
        return run_experiment(dataset, ExperimentConfig.from_run_config(cell_config), builder, aux)

    summary = run_sweep(config, grid, run_cell, output_dir)
    print(summary.to_csv(index=False), end="")
    return 0


def cmd_gen_synthetic(args: argparse.Namespace) -> int:
    output_dir = Path(args.output)
    args.output_dir = output_dir
    spec = SyntheticSpec(
        C_train=args.train_classes, C_test=args.test_classes, per_class=args.per_class,
        d_x=args.dx, d_z=args.dz, noise_sigma=args.noise, shift_sigma=args.shift, seed=args.seed,
        n_clusters=args.clusters, cluster_leak=args.cluster_leak, test_cluster=args.test_cluster,
        shift_mode=args.shift_mode, cue_sigma=args.cue, normalize_rows=args.normalize_rows,
    )
    data = generate_synthetic(spec)
    output_dir.mkdir(parents=True, exist_ok=True)
    write_dataset(data.dataset, output_dir / "features.zslf", output_dir / "labels.txt")
    write_word_vectors(output_dir / "class_vectors.txt", data.dataset.class_names, data.class_matrix.T)
    np.savetxt(output_dir / "mapping.csv", data.mapping, delimiter=",", fmt="%.17g")
    (output_dir / "run.toml").write_text(
        "[data]\n"
        'features = "features.zslf"\n'
        'labels = "labels.txt"\n'
        f'name = "{data.dataset.name}"\n\n'
        "[embedding]\n"
        'mode = "word-vector"\n'
        'word_vectors = "class_vectors.txt"\n',
        encoding="utf-8",
    )
    summary = {
        "spec": {k: getattr(spec, k) for k in spec.__dataclass_fields__},
        "n_instances": data.dataset.n_instances,
        "classes": list(data.dataset.class_names),
        "planted_split": data.split.to_dict(),
        "clusters": list(data.clusters),
    }
    (output_dir / "ground_truth.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    report_path = Path(args.report)
    report_dir = report_path if report_path.is_dir() else report_path.parent
    output_dir = Path(args.output) if args.output else report_dir / "analysis"
    args.output_dir = output_dir

    report = read_report(report_path)
    records = records_from_report(report)
    config = load_run_config(args.config or report_dir / RESOLVED_CONFIG)
    dataset, _, builder = load_context(config)
    names = list(dataset.class_names)
    output_dir.mkdir(parents=True, exist_ok=True)

    correlation = transfer_correlation(records, dataset.n_classes, verbatim=args.verbatim,
                                       min_splits=args.min_splits)
    correlation_frame(correlation, names).to_csv(output_dir / "correlation.csv", float_format="%.17g")

    Z_all = builder(names)
    affinities = affinity_report(Z_all, names)
    raw, percentile = affinities.frames()
    raw.to_csv(output_dir / "affinity.csv", float_format="%.17g")
    percentile.to_csv(output_dir / "affinity_percentile.csv", float_format="%.17g")

    lines = ["split_id,class,r_max,r_mean,r_min"]
    for record in records:
        candidates = sorted(record.train_classes)
        r = classname_affinity(Z_all, candidates, record.test_classes)
        for idx, c in enumerate(candidates):
            lines.append(f"{record.split_id},{names[c]},{float(r.r_max[idx])!r},{float(r.r_mean[idx])!r},{float(r.r_min[idx])!r}")
    (output_dir / "classname_affinity.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    try:
        agreement = correlation_affinity_agreement(correlation, affinities.affinity)
        (output_dir / "agreement.json").write_text(json.dumps({
            "coefficient": agreement.coefficient,
            "n_pairs": agreement.n_pairs,
            "bin_edges": agreement.bin_edges.tolist(),
            "bin_means": [None if np.isnan(v) else v for v in agreement.bin_means],
            "bin_counts": agreement.bin_counts.tolist(),
        }, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except MetricError as e:
        logger.warning("agreement_skipped", reason=str(e))

    if args.percentages:
        try:
            percentages = [float(p) for p in args.percentages.split(",")]
        except ValueError as e:
            raise ConfigError(f"--percentages must be comma-separated numbers: {e}") from e
        splits = [ZeroShotSplit(r.split_id, r.train_classes, r.test_classes, seed=config.evaluation.seed)
                  for r in records]
        curve = related_subset_curve(dataset, splits, percentages, args.op,
                                     ExperimentConfig.from_run_config(config), builder)
        curve.to_frame().to_csv(output_dir / "subset_curve.csv", index=False, float_format="%.17g")

    print(json.dumps({"output": str(output_dir), "splits": len(records),
                      "valid_pairs": int(correlation.valid.sum())}, sort_keys=True))
    return 0


def cmd_fit(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    dataset, aux, builder = load_context(config)
    split = _select_split(dataset, config, args.split_id)
    experiment = ExperimentConfig.from_run_config(config)
    train_rows = dataset.indices_of(split.train_classes)
    X_te = dataset.X[dataset.indices_of(split.test_classes)]
    model = fit_split_model(dataset, split, experiment, builder, train_rows,
                            sorted(split.train_classes), X_te, aux)
    dump_model(model, args.model_out)
    if args.dump_graph:
        graph = build_knn_graph(model.basis, experiment.hyperparams.graph_k,
                                experiment.hyperparams.graph_weighting,
                                experiment.hyperparams.heat_bandwidth)
        write_edge_list(graph, args.dump_graph)
    print(json.dumps({"model": str(args.model_out), "variant": model.variant.value,
                      "n_labeled": model.n_labeled, "n_unlabeled": model.n_unlabeled,
                      "split_id": split.split_id}, sort_keys=True))
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    dataset, _, builder = load_context(config)
    split = _select_split(dataset, config, args.split_id)
    model = load_model(args.model)

    test_classes = sorted(split.test_classes)
    rows = dataset.indices_of(test_classes)
    projections = project(model, dataset.X[rows])
    prototypes = builder(dataset.names_of(test_classes))
    if config.inference.self_train:
        prototypes = self_train(prototypes, projections, config.inference.self_train_k,
                                renormalize=config.inference.renormalize_adapted).adapted
    distances = distance_matrix(projections, prototypes, instance_ids=rows, class_ids=test_classes)
    prediction = MatcherFactory.predict(config.inference.matcher, distances, config.inference.self_train)
    write_predictions(prediction, args.predictions)
    correct = float(np.mean(prediction.predicted == dataset.y[rows]))
    print(json.dumps({"predictions": str(args.predictions), "accuracy": correct}, sort_keys=True))
    return 0


def cmd_export_projections(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    dataset, aux, builder = load_context(config)
    split = _select_split(dataset, config, args.split_id)
    experiment = ExperimentConfig.from_run_config(config)
    train_rows = dataset.indices_of(split.train_classes)
    X_te = dataset.X[dataset.indices_of(split.test_classes)]
    model = fit_split_model(dataset, split, experiment, builder, train_rows,
                            sorted(split.train_classes), X_te, aux)
    k = config.inference.self_train_k if config.inference.self_train else None
    table = export_projections(model, dataset, split, args.path, builder, self_train_k=k,
                               renormalize=config.inference.renormalize_adapted)
    print(json.dumps({"path": str(args.path), "rows": int(len(table))}, sort_keys=True))
    return 0


COMMANDS = {
    'eval': cmd_eval,
    'sweep': cmd_sweep,
    'gen-synthetic': cmd_gen_synthetic,
    'analyze': cmd_analyze,
    'fit': cmd_fit,
    'predict': cmd_predict,
    'export-projections': cmd_export_projections,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='zsl',
        description="Transductive zero-shot learning toolkit",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Generate a planted-map dataset and evaluate it
  zsl gen-synthetic --output data/synth --noise 0.05
  zsl eval --config data/synth/run.toml --variant ridge --splits 5 --output runs/synth

  # Manifold regression with self-training and hubness correction
  zsl eval --config run.toml --matcher gc --self-train

  # Sweep the self-training neighbourhood
  zsl sweep --config run.toml --grid self_train_k=1:200 --output runs/st-sweep
        """
    )
    parser.add_argument('--log-level', help='Log level (default: $ZSL_LOG_LEVEL or INFO)')
    parser.add_argument('--log-format', choices=['console', 'json'],
                        help='Log format (default: $ZSL_LOG_FORMAT or console)')

    subparsers = parser.add_subparsers(dest='command', help='Available commands')

    # Eval command
    eval_parser = subparsers.add_parser('eval', help='Run the split-based evaluation')
    _add_config_flags(eval_parser)

    # Sweep command
    sweep_parser = subparsers.add_parser('sweep', help='Evaluate a hyperparameter grid')
    _add_config_flags(sweep_parser)
    sweep_parser.add_argument('--grid', action='append', required=True, metavar='NAME=VALUES',
                              help='gamma_a, gamma_i, graph_k or self_train_k values (repeatable)')

    # Synthetic data command
    synth_parser = subparsers.add_parser('gen-synthetic', help='Write a planted-map dataset')
    synth_parser.add_argument('--output', required=True, help='Output directory')
    synth_parser.add_argument('--train-classes', type=int, default=6)
    synth_parser.add_argument('--test-classes', type=int, default=4)
    synth_parser.add_argument('--per-class', type=int, default=30)
    synth_parser.add_argument('--dx', type=int, default=20)
    synth_parser.add_argument('--dz', type=int, default=5)
    synth_parser.add_argument('--noise', type=float, default=0.0)
    synth_parser.add_argument('--shift', type=float, default=0.0)
    synth_parser.add_argument('--seed', type=int, default=0)
    synth_parser.add_argument('--clusters', type=int, default=1)
    synth_parser.add_argument('--cluster-leak', type=float, default=0.1)
    synth_parser.add_argument('--test-cluster', type=int, default=None)
    synth_parser.add_argument('--shift-mode', choices=['independent', 'shared'], default='independent',
                              help='Per-class offset directions, or one offset shared by all test classes')
    synth_parser.add_argument('--cue', type=float, default=0.0,
                              help='Scale of the test-side cue channel (0 disables it)')
    synth_parser.add_argument('--normalize-rows', action='store_true', help='L2-normalize feature rows')

    # Analyze command
    analyze_parser = subparsers.add_parser('analyze', help='Transfer and affinity analysis of a report')
    analyze_parser.add_argument('--report', required=True, help='Report directory or report.json')
    analyze_parser.add_argument('--config', help='Run config (default: the report\'s resolved config)')
    analyze_parser.add_argument('--output', help='Output directory (default: <report>/analysis)')
    analyze_parser.add_argument('--verbatim', action='store_true',
                                help='Divide covariance by var*var instead of std*std')
    analyze_parser.add_argument('--min-splits', type=int, default=10,
                                help='Minimum number of splits for transfer correlation (default: 10)')
    analyze_parser.add_argument('--percentages', help='Comma-separated S values for subset curves')
    analyze_parser.add_argument('--op', choices=['max', 'mean', 'min'], default='max',
                                help='Affinity aggregate for subset selection (default: max)')

    # Fit command
    fit_parser = subparsers.add_parser('fit', help='Fit one split and dump the model')
    _add_config_flags(fit_parser)
    fit_parser.add_argument('--split-id', type=int, default=0)
    fit_parser.add_argument('--model-out', required=True, help='Model file to write')
    fit_parser.add_argument('--dump-graph', help='Write the KNN graph edge list here')

    # Predict command
    predict_parser = subparsers.add_parser('predict', help='Predict test classes with a dumped model')
    _add_config_flags(predict_parser)
    predict_parser.add_argument('--split-id', type=int, default=0)
    predict_parser.add_argument('--model', required=True, help='Model file from fit')
    predict_parser.add_argument('--predictions', required=True, help='Prediction CSV to write')

    # Export command
    export_parser = subparsers.add_parser('export-projections', help='Export projected test data')
    _add_config_flags(export_parser)
    export_parser.add_argument('--split-id', type=int, default=0)
    export_parser.add_argument('--path', required=True, help='CSV file to write')

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main CLI entry point."""
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return 1

    handler = ErrorHandler()
    args.output_dir = None
    try:
        configure_logging(args.log_level, args.log_format)
        return COMMANDS[args.command](args)
    except Exception as e:
        record = handler.handle_error(e)
        payload = json.dumps(record.to_dict(), sort_keys=True)
        print(payload, file=sys.stderr)
        if args.output_dir is not None:
            try:
                Path(args.output_dir).mkdir(parents=True, exist_ok=True)
                (Path(args.output_dir) / ERROR_FILE).write_text(payload + "\n", encoding="utf-8")
            except OSError:
                logger.warning("error_file_not_written", directory=str(args.output_dir))
        return record.exit_code


if __name__ == '__main__':
    sys.exit(main())
