"""
============================================================================
ANALYSIS COMMANDS
============================================================================
Subcommands untuk analisis models yang sudah ada.

Commands:
    filter       - Filter models terhadap reference, flag ok/warn/fail;
                   sheets raw (P) dan filtered (F = M * P)
    compare      - Difference maps + distances antara dua models
    graph        - Character graphs dan document graphs (SVG)
    variability  - Sigma per character per subtype
============================================================================
"""

from typing import Dict, Optional, Tuple

from app.api import deps
from app.api.deps import RunContext
from app.api.router import CommandRouter, arg
from app.core.config import RunConfig
from app.core.logging import get_logger
from app.crud.crud_model import load_model
from app.crud.crud_outputs import emit_outputs
from app.schemas.analysis import DifferenceMap, VariabilityReport
from app.schemas.filter import FilterFlag
from app.schemas.model import ModelState
from app.services import workflow

logger = get_logger(__name__)


# ============================================================================
# ROUTER SETUP
# ============================================================================
router = CommandRouter()

REFERENCE_ARG = arg("--reference", config="paths.reference", metavar="MODEL", help="Common reference model")
CORPUS_ARG = arg("--corpus", config="paths.corpus", metavar="MANIFEST", help="Corpus manifest (JSON)")
MODELS_ARGS = [
    arg("--models", nargs="+", metavar="MODEL", help="Model files"),
    arg("--models-dir", metavar="DIR", help="Directory with model files"),
]
ANALYSIS_ARGS = [
    arg("--norm", config="analysis.norm", choices=["l2", "l1"]),
    arg("--source", config="analysis.source", choices=["filtered", "raw"]),
]


def _reference_from(config: RunConfig, models: Dict[str, ModelState]) -> ModelState:
    """--reference, atau model berlabel "reference" di antara models."""
    if config.paths.reference or deps.REFERENCE_NAME not in models:
        return deps.get_reference(config)
    return models[deps.REFERENCE_NAME]


def compare_outputs(
    model_a: ModelState, model_b: ModelState, results: Dict[str, Tuple[DifferenceMap, float]]
) -> Tuple[Dict[str, DifferenceMap], Dict[str, float]]:
    """Nama file difference map dan distances dari hasil compare_pair."""
    prefix = f"{model_a.label or 'a'}-vs-{model_b.label or 'b'}"
    maps = {f"{prefix}-{char}": diff for char, (diff, _) in results.items()}
    distances = {char: distance for char, (_, distance) in results.items()}
    return maps, distances


def variability_summary(reports: Dict[str, VariabilityReport]) -> Dict[str, dict]:
    return {
        subtype: {
            "aggregate": report.aggregate,
            "documents": list(report.documents),
            "sigma": report.sigma,
            "ranked": [char for char, _ in report.ranked()],
        }
        for subtype, report in reports.items()
    }


# ============================================================================
# FILTER
# ============================================================================

@router.command("filter", help="Filter models against the reference", args=[REFERENCE_ARG, *MODELS_ARGS])
def filter_models(ctx: RunContext) -> None:
    models = deps.get_models(ctx.args.models, ctx.args.models_dir)
    reference = _reference_from(ctx.config, models)
    reports = workflow.filter_fleet(reference, models, ctx.config.filter)
    filtered = workflow.filtered_models(models, reports)
    failed = sum(1 for rows in reports.values() for r in rows if r.flag is FilterFlag.FAIL)
    if failed:
        logger.warning("%d prototypes failed filtering", failed)
    emit_outputs(
        ctx.out_dir,
        report={"reference": reference.model_id, "filter": workflow.filter_summary(reports)},
        sheets={
            "raw": [models[name] for name in sorted(models)],
            "filtered": [filtered[name] for name in sorted(filtered)],
        },
        flags=workflow.flag_table(reports, models),
        report_name="filter_report.json",
    )


# ============================================================================
# COMPARE
# ============================================================================

@router.command(
    "compare",
    help="Difference maps and distances between two models",
    args=[
        arg("--model-a", required=True, metavar="MODEL"),
        arg("--model-b", required=True, metavar="MODEL"),
        REFERENCE_ARG,
        *ANALYSIS_ARGS,
    ],
)
def compare(ctx: RunContext) -> None:
    """
    Tanpa --reference prototypes dibandingkan raw. Dengan --reference dan
    source=filtered, keduanya difilter dengan mask dari reference.
    """
    model_a = load_model(ctx.args.model_a)
    model_b = load_model(ctx.args.model_b)
    reference: Optional[ModelState] = None
    if ctx.config.paths.reference:
        reference = deps.get_reference(ctx.config)
    results = workflow.compare_pair(model_a, model_b, reference, ctx.config.filter, ctx.config.analysis)
    maps, distances = compare_outputs(model_a, model_b, results)
    emit_outputs(
        ctx.out_dir,
        report={
            "model_a": model_a.model_id,
            "model_b": model_b.model_id,
            "norm": ctx.config.analysis.norm,
            "distances": distances,
        },
        difference_maps=maps,
        report_name="compare_report.json",
    )


# ============================================================================
# GRAPHS & VARIABILITY
# ============================================================================

@router.command(
    "graph",
    help="Character and document comparison graphs",
    args=[
        CORPUS_ARG,
        REFERENCE_ARG,
        *MODELS_ARGS,
        arg("--axis-a", metavar="LABEL", help="Model label for axis A (default: first subtype)"),
        arg("--axis-b", metavar="LABEL", help="Model label for axis B (default: second subtype)"),
        *ANALYSIS_ARGS,
    ],
)
def graph(ctx: RunContext) -> None:
    models = deps.get_models(ctx.args.models, ctx.args.models_dir)
    reference = _reference_from(ctx.config, models)
    corpus = deps.get_corpus(ctx.config, reference.line_height)
    fleet = deps.get_fleet(reference, corpus, models)
    ref_a, ref_b = deps.get_axes(fleet, models, ctx.args.axis_a, ctx.args.axis_b)
    graphs = workflow.build_graphs(fleet, corpus, ref_a, ref_b, ctx.config.filter, ctx.config.analysis)
    emit_outputs(
        ctx.out_dir,
        report={"axes": [ref_a.label, ref_b.label], "graphs": [g.to_dict() for g in graphs]},
        graphs=graphs,
        report_name="graph_report.json",
    )


@router.command(
    "variability",
    help="Per-character variability within each subtype",
    args=[
        CORPUS_ARG,
        REFERENCE_ARG,
        *MODELS_ARGS,
        arg("--aggregate", config="analysis.aggregate", choices=["sum", "mean"]),
        *ANALYSIS_ARGS,
    ],
)
def variability(ctx: RunContext) -> None:
    models = deps.get_models(ctx.args.models, ctx.args.models_dir)
    reference = _reference_from(ctx.config, models)
    corpus = deps.get_corpus(ctx.config, reference.line_height)
    fleet = deps.get_fleet(reference, corpus, models)
    reports = workflow.variability_by_subtype(fleet, corpus, ctx.config.filter, ctx.config.analysis)
    emit_outputs(ctx.out_dir, report={"variability": variability_summary(reports)}, report_name="variability_report.json")
