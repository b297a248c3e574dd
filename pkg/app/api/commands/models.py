"""
============================================================================
MODEL COMMANDS
============================================================================
Subcommands untuk membuat models.

Commands:
    synth     - Generate synthetic corpus (manifest + PNG + ground truth)
    train     - Corpus -> reference model
    finetune  - Corpus + reference -> document dan subtype models
============================================================================
"""

from app.api import deps
from app.api.deps import RunContext
from app.api.router import CommandRouter, arg
from app.core.logging import get_logger
from app.crud.crud_corpus import write_corpus
from app.crud.crud_model import save_model
from app.crud.crud_outputs import emit_outputs
from app.services import workflow
from app.services.synth import generate_corpus

logger = get_logger(__name__)

CORPUS_DIR = "corpus"
# Finetuning selalu memakai placements dari reference pass
FROZEN_PLACEMENTS = {"train.freeze_placements": True}


# ============================================================================
# ROUTER SETUP
# ============================================================================
router = CommandRouter()

CORPUS_ARG = arg("--corpus", config="paths.corpus", metavar="MANIFEST", help="Corpus manifest (JSON)")
REFERENCE_ARG = arg("--reference", config="paths.reference", metavar="MODEL", help="Reference model file")
TRAIN_ARGS = [
    arg("--max-rounds", config="train.max_rounds", type=int, help="Maximum training rounds"),
    arg("--proto-side", config="train.proto_side", type=int, help="Prototype side K"),
    arg("--line-height", config="train.line_height", type=int, help="Line height H"),
]


@router.command(
    "synth",
    help="Generate a synthetic two-subtype corpus",
    args=[
        arg("--docs-per-subtype", config="synth.documents_per_subtype", type=int),
        arg("--lines-per-doc", config="synth.lines_per_document", type=int),
        arg("--glyphs-per-line", config="synth.glyphs_per_line", type=int),
        arg("--synth-side", config="synth.proto_side", type=int, help="Glyph side of the generator"),
    ],
)
def synth(ctx: RunContext) -> None:
    """
    Tulis corpus ke <out>/corpus/: manifest.json, satu PNG per line, dan
    ground_truth/ (prototypes per subtype dan per dokumen, placements).
    """
    corpus = generate_corpus(ctx.config.synth)
    manifest = write_corpus(corpus, ctx.out_dir / CORPUS_DIR)
    logger.info("manifest: %s", manifest)


@router.command("train", help="Train a reference model from a corpus", args=[CORPUS_ARG, *TRAIN_ARGS])
def train(ctx: RunContext) -> None:
    corpus = deps.get_corpus(ctx.config)
    reference = workflow.train_step(corpus, ctx.config.train)
    path = save_model(reference, deps.model_path(ctx.models_dir, deps.REFERENCE_NAME))
    emit_outputs(
        ctx.out_dir,
        report={"corpus": corpus.corpus_id, "reference": workflow.model_summary(reference)},
        sheets={"reference": [reference]},
        report_name="train_report.json",
    )
    logger.info("reference model %s saved to %s", reference.model_id, path)


@router.command(
    "finetune",
    help="Finetune document and subtype models from a reference",
    args=[CORPUS_ARG, REFERENCE_ARG, arg("--max-rounds", config="train.max_rounds", type=int)],
    fixed=FROZEN_PLACEMENTS,
)
def finetune(ctx: RunContext) -> None:
    """
    Placements dihitung sekali dengan reference dan dibekukan; satu model
    per dokumen dan satu per subtype (dari dokumen reference subtype itu).
    Reference ikut disalin ke <out>/models/ supaya parent ditemukan.
    """
    reference = deps.get_reference(ctx.config)
    corpus = deps.get_corpus(ctx.config, reference.line_height)
    fleet = workflow.finetune_fleet(reference, corpus, ctx.config.train)
    deps.save_fleet(fleet, ctx.models_dir)
    emit_outputs(
        ctx.out_dir,
        report={
            "corpus": corpus.corpus_id,
            "reference": workflow.model_summary(reference),
            "models": {name: workflow.model_summary(m) for name, m in sorted(fleet.all_models().items())},
        },
        sheets=fleet_sheets(fleet),
        report_name="finetune_report.json",
    )


def fleet_sheets(fleet: workflow.Fleet) -> dict:
    """Sheet rows: subtype models (jika ada) dan document models."""
    sheets = {"documents": [fleet.documents[d] for d in sorted(fleet.documents)]}
    if fleet.subtypes:
        sheets["subtypes"] = [fleet.subtypes[s] for s in sorted(fleet.subtypes)]
    return sheets
