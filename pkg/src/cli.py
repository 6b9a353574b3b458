"""
Command-line interface for the ordinal encoding experiments.

Subcommands: generate, train, sweep, report, gradcheck and encode. Logs go
to stderr; stdout carries command output only.
"""

import argparse
import logging
import os
import sys
from typing import Dict, Optional, Sequence

from .config import get_config, load_experiment_config, parse_positions
from .error_handler import EXIT_OK, handle_error
from .exceptions import ConfigurationError, NumericError
from .export import SUMMARY_HTML, ExportManager
from .harness import run_single, run_sweep, synth_config_for
from .label_codec import encode_scheme
from .learned_codec import DEFAULT_TARGET_MASS, EncodingParams, materialize
from .models import DistanceSpec, Geometry, LabelMatrix, RankAssignment, Scheme, class_names
from .ordering_search import enumerate_orderings
from .stats import sweep_summary
from .synthdata import SynthConfig, bayes_error, generate, write_dataset
from .trainer import GRADIENT_TOLERANCE, gradient_oracles

LABEL_MATRICES_HTML = "label_matrices.html"


class _ArgumentParser(argparse.ArgumentParser):
    """Turns usage errors into configuration errors so they share one diagnostic format."""

    def error(self, message):
        raise ConfigurationError(message)


def _float_arg(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"'{text}' is not a number")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="ordinal",
                             description="Ordinal label encoding experiments.")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    gen = commands.add_parser("generate", help="write a synthetic dataset")
    gen.add_argument("--config", help="experiment config; its data keys are used")
    gen.add_argument("--seed", type=int, help="data seed")
    gen.add_argument("--out", help="dataset file (default: <output dir>/dataset.csv)")
    gen.add_argument("--samples-per-class", type=int, help="override the per-class sample count")

    train = commands.add_parser("train", help="train one (size, seed) cell")
    train.add_argument("--config", required=True)
    train.add_argument("--seed", type=int, help="run seed (default: first configured seed)")
    train.add_argument("--data-seed", type=int)
    train.add_argument("--out", help="output directory")
    train.add_argument("--size", type=int, help="training set size (default: largest)")

    sweep = commands.add_parser("sweep", help="run the (scheme, size, seed) grid")
    sweep.add_argument("--config", required=True, action="append",
                       help="experiment config; repeat for each scheme variant")
    sweep.add_argument("--seed", type=int, help="run only this seed")
    sweep.add_argument("--data-seed", type=int)
    sweep.add_argument("--out", help="output directory")
    sweep.add_argument("--figures", action="store_true", help="also write HTML figures")

    report = commands.add_parser("report", help="summarize persisted run reports")
    report.add_argument("--out", help="directory holding the reports")
    report.add_argument("--figures", action="store_true", help="also write HTML figures")

    grad = commands.add_parser("gradcheck", help="run the finite-difference gradient checks")
    grad.add_argument("--seed", type=int, default=0)

    enc = commands.add_parser("encode", help="print a label matrix")
    enc.add_argument("--scheme", required=True, choices=[s.value for s in Scheme])
    enc.add_argument("--k", type=int, default=4, help="number of classes")
    enc.add_argument("--s", type=_float_arg, help="SORD scale factor")
    enc.add_argument("--positions", help="comma-separated ranks, e.g. '0, 0.5pi, pi, 1.5pi'")
    enc.add_argument("--target-mass", type=_float_arg, default=DEFAULT_TARGET_MASS,
                     help="target mass of the learned encoding")
    enc.add_argument("--report", help="take the learned matrix from this run report")
    enc.add_argument("--figure", help="also write a heatmap to this HTML file")
    return parser


class ExperimentCLI:
    """Dispatches parsed arguments to the harness."""

    def __init__(self, stdout=None):
        self.logger = logging.getLogger(__name__)
        self.stdout = stdout or sys.stdout
        self.exporter = ExportManager()

    def _print(self, text: str = "") -> None:
        print(text, file=self.stdout)

    def run(self, args: argparse.Namespace) -> int:
        handler = getattr(self, f"_cmd_{args.command}")
        return handler(args)

    @staticmethod
    def _overrides(args: argparse.Namespace) -> Dict[str, object]:
        overrides: Dict[str, object] = {}
        if getattr(args, "seed", None) is not None:
            overrides['seeds'] = (args.seed,)
        if getattr(args, "data_seed", None) is not None:
            overrides['data_seed'] = args.data_seed
        if getattr(args, "out", None):
            overrides['output_dir'] = args.out
        return overrides

    def _cmd_generate(self, args: argparse.Namespace) -> int:
        if args.config:
            synth = synth_config_for(load_experiment_config(args.config))
        else:
            synth = SynthConfig()
        changes = synth.to_dict()
        if args.seed is not None:
            changes['seed'] = args.seed
        if args.samples_per_class is not None:
            changes['samples_per_class'] = args.samples_per_class
        synth = SynthConfig(**changes)

        path = args.out or os.path.join(get_config().get('harness.output_dir'), "dataset.csv")
        write_dataset(generate(synth), path)
        self._print(f"{path}\tbayes_error={bayes_error(synth):.6f}")
        return EXIT_OK

    def _cmd_train(self, args: argparse.Namespace) -> int:
        config = load_experiment_config(args.config, self._overrides(args))
        report = run_single(config, args.size)
        accuracy = "failed" if report.is_failed else f"{report.test_accuracy:.6f}"
        self._print(f"{os.path.join(config.output_dir, report.stem + '.json')}\t"
                    f"test_accuracy={accuracy}")
        return EXIT_OK

    def _cmd_sweep(self, args: argparse.Namespace) -> int:
        overrides = self._overrides(args)
        configs = [load_experiment_config(path, overrides) for path in args.config]
        output_dirs = {c.output_dir for c in configs}
        if len(output_dirs) > 1:
            raise ConfigurationError(
                f"sweep configs write to different directories: {sorted(output_dirs)}",
                "output_dir")
        reports = run_sweep(configs)
        self._summarize(reports, configs[0].output_dir, args.figures)
        return EXIT_OK

    def _cmd_report(self, args: argparse.Namespace) -> int:
        directory = args.out or get_config().get('harness.output_dir')
        reports = self.exporter.read_reports(directory)
        self._summarize(reports, directory, args.figures)
        return EXIT_OK

    def _summarize(self, reports, directory: str, figures: bool) -> None:
        summary = sweep_summary(reports)
        csv_path = self.exporter.write_summary_csv(summary, directory)
        self.exporter.write_summary_json(summary, directory)
        if figures:
            self.exporter.write_figure_html(self.exporter.accuracy_curves_figure(summary),
                                            os.path.join(directory, SUMMARY_HTML))
            matrices = self._report_matrices(reports)
            if matrices:
                names = class_names(reports[0].config['num_classes'])
                self.exporter.write_figure_html(
                    self.exporter.label_matrix_figure(matrices, names),
                    os.path.join(directory, LABEL_MATRICES_HTML))
        self._print(csv_path)

    @staticmethod
    def _report_matrices(reports) -> Dict[str, LabelMatrix]:
        # One matrix per variant: largest training set, lowest seed.
        chosen = {}
        for report in sorted(reports, key=lambda r: (-r.train_size, r.seed)):
            if report.label_matrix and report.variant not in chosen:
                chosen[report.variant] = LabelMatrix.from_text(report.label_matrix)
        return dict(sorted(chosen.items()))

    def _cmd_gradcheck(self, args: argparse.Namespace) -> int:
        results = gradient_oracles(seed=args.seed)
        for name, error in results.items():
            self._print(f"{name}\t{error:.3e}")
        failed = [name for name, error in results.items() if not error < GRADIENT_TOLERANCE]
        if failed:
            raise NumericError(f"gradient check above {GRADIENT_TOLERANCE:g}: {', '.join(failed)}")
        return EXIT_OK

    def _cmd_encode(self, args: argparse.Namespace) -> int:
        positions = parse_positions(args.positions) if args.positions else None
        matrices = self._encodings(args, positions)
        blocks = []
        for title, matrix in matrices.items():
            header = f"# {title}\n" if len(matrices) > 1 else ""
            blocks.append(header + matrix.to_text())
        self.stdout.write("\n".join(blocks))
        if args.figure:
            self.exporter.write_figure_html(
                self.exporter.label_matrix_figure(matrices, class_names(args.k)), args.figure)
        return EXIT_OK

    def _encodings(self, args: argparse.Namespace,
                   positions: Optional[Sequence[float]]) -> Dict[str, LabelMatrix]:
        scheme = Scheme(args.scheme)
        if scheme == Scheme.LEARNED:
            if args.report:
                report = self.exporter.read_run_report(args.report)
                if not report.label_matrix:
                    raise ConfigurationError("report carries no label matrix", "report")
                return {report.variant: LabelMatrix.from_text(report.label_matrix)}
            return {scheme.value: materialize(EncodingParams.zeros(args.k, args.target_mass))}
        if scheme == Scheme.PLSORD:
            if args.s is None:
                raise ConfigurationError("scheme 'plsord' requires the hyperparameter 's'", "s")
            if positions is None:
                positions = RankAssignment.equally_spaced(args.k, Geometry.CIRCULAR).ranks
            candidates = enumerate_orderings(args.k, positions, Geometry.CIRCULAR)
            encodings = candidates.encodings(DistanceSpec(Geometry.CIRCULAR, args.s))
            return {f"candidate {j}: ranks {', '.join(f'{r:.6g}' for r in c.ranks)}": e
                    for j, (c, e) in enumerate(zip(candidates.candidates, encodings))}
        return {scheme.value: encode_scheme(scheme.value, args.k, args.s, positions)}


def main(argv: Optional[Sequence[str]] = None, stdout=None) -> int:
    """
    Main entry point.

    Returns:
        int: Process exit status
    """
    try:
        get_config().setup_logging()
        args = build_parser().parse_args(argv)
        return ExperimentCLI(stdout).run(args)
    except KeyboardInterrupt:
        logging.getLogger(__name__).warning("Interrupted")
        return 130
    except Exception as e:
        return handle_error(e, {'argv': ' '.join(argv if argv is not None else sys.argv[1:])})
