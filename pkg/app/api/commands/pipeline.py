"""
============================================================================
PIPELINE COMMAND
============================================================================
End-to-end run: (synth) -> train -> finetune -> filter -> compare ->
graph -> variability, semua artifacts di satu output directory.

Output layout:
    <out>/corpus/          synthetic corpus (jika --corpus tidak diberikan)
    <out>/models/          reference, subtype_*, doc_* model files
    <out>/sheets/          prototype sheets raw + filtered (outline warn/fail)
    <out>/diffs/           difference maps subtype A vs B per character
    <out>/graphs/          character_*.svg dan document_*.svg
    <out>/report.json      semua angka
    <out>/run_config.json  config hasil merge
============================================================================
"""

from typing import Any, Dict

from app.api import deps
from app.api.commands.analysis import compare_outputs, variability_summary
from app.api.commands.models import CORPUS_DIR, FROZEN_PLACEMENTS, TRAIN_ARGS, fleet_sheets
from app.api.deps import RunContext
from app.api.router import CommandRouter, arg
from app.core.logging import get_logger
from app.crud.crud_corpus import load_corpus, write_corpus
from app.crud.crud_outputs import emit_outputs
from app.services import workflow
from app.services.synth import generate_corpus

logger = get_logger(__name__)

router = CommandRouter()


@router.command(
    "pipeline",
    help="Run the full analysis; synthesizes a corpus when --corpus is absent",
    args=[
        arg("--corpus", config="paths.corpus", metavar="MANIFEST", help="Corpus manifest (JSON)"),
        *TRAIN_ARGS,
        arg("--norm", config="analysis.norm", choices=["l2", "l1"]),
        arg("--source", config="analysis.source", choices=["filtered", "raw"]),
    ],
    fixed=FROZEN_PLACEMENTS,
)
def pipeline(ctx: RunContext) -> None:
    config = ctx.config
    manifest = config.paths.corpus
    if not manifest:
        logger.info("no corpus given; generating a synthetic one")
        manifest = str(write_corpus(generate_corpus(config.synth), ctx.out_dir / CORPUS_DIR))
    corpus = load_corpus(manifest, config.train.line_height, config.charset, n_jobs=config.train.n_jobs)

    reference = workflow.train_step(corpus, config.train)
    fleet = workflow.finetune_fleet(reference, corpus, config.train)
    deps.save_fleet(fleet, ctx.models_dir)

    models = {deps.REFERENCE_NAME: reference, **fleet.all_models()}
    filter_reports = workflow.filter_fleet(reference, models, config.filter)
    filtered = workflow.filtered_models(models, filter_reports)

    report: Dict[str, Any] = {
        "corpus": corpus.corpus_id,
        "reference": workflow.model_summary(reference),
        "models": {name: workflow.model_summary(m) for name, m in sorted(fleet.all_models().items())},
        "filter": workflow.filter_summary(filter_reports),
    }
    difference_maps = {}
    graphs = []
    if len(fleet.subtypes) >= 2:
        first, second = sorted(fleet.subtypes)[:2]
        ref_a, ref_b = fleet.subtypes[first], fleet.subtypes[second]
        results = workflow.compare_pair(ref_a, ref_b, reference, config.filter, config.analysis)
        difference_maps, distances = compare_outputs(ref_a, ref_b, results)
        report["compare"] = {"axes": [ref_a.label, ref_b.label], "norm": config.analysis.norm, "distances": distances}
        graphs = workflow.build_graphs(fleet, corpus, ref_a, ref_b, config.filter, config.analysis)
        report["graphs"] = [g.to_dict() for g in graphs]
    else:
        logger.warning("fewer than two subtypes; skipping comparison and graphs")
    report["variability"] = variability_summary(
        workflow.variability_by_subtype(fleet, corpus, config.filter, config.analysis)
    )

    emit_outputs(
        ctx.out_dir,
        report=report,
        sheets={
            "reference": [reference],
            **fleet_sheets(fleet),
            "filtered": [filtered[name] for name in sorted(filtered)],
        },
        flags=workflow.flag_table(filter_reports, models),
        difference_maps=difference_maps,
        graphs=graphs,
    )
