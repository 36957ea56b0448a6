"""framescope command line: one subcommand per pipeline stage."""
from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")


@click.group()
def main() -> None:
    """Podcast narrative-frame analysis pipeline."""


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True), help="line-delimited episode records")
@click.option("--out", "out_dir", required=True, type=click.Path(), help="output directory")
@click.option("--strict", is_flag=True, help="abort on the first malformed record")
def ingest(in_path: str, out_dir: str, strict: bool) -> None:
    """Validate and normalize raw episode records."""
    from .corpus import IngestStats, load_episodes, write_episodes

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stats = IngestStats()
    episodes = list(load_episodes(in_path, strict=strict, stats=stats))
    write_episodes(episodes, out / "episodes.jsonl")
    (out / "ingest_stats.json").write_text(json.dumps(stats.to_json(), indent=2) + "\n", encoding="utf-8")
    click.echo(f"accepted {stats.accepted} episodes, rejected {stats.rejected_count}")


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True), help="episodes.jsonl")
@click.option("--out", "out_path", required=True, type=click.Path(), help="chunk store (jsonl)")
@click.option("--size", default=250, show_default=True, help="tokens per chunk")
def chunk(in_path: str, out_path: str, size: int) -> None:
    """Segment transcripts into fixed-size token chunks."""
    from .corpus import chunk_episode, load_episodes, write_chunks

    chunks = []
    for episode in load_episodes(in_path):
        chunks.extend(chunk_episode(episode, size))
    n = write_chunks(chunks, out_path)
    click.echo(f"wrote {n} chunks to {out_path}")


@main.command(name="filter")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True), help="episodes.jsonl")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--min-gap-days", default=0.5, show_default=True)
@click.option("--min-episodes", default=10, show_default=True)
@click.option("--min-duration", default=300, show_default=True)
@click.option("--top-categories", default=50, show_default=True)
@click.option("--cap", default=60, show_default=True)
@click.option("--target", default=0, show_default=True, help="stratified sample size (0 = keep all)")
@click.option("--seed", default=0, show_default=True)
def filter_cmd(
    in_path: str,
    out_dir: str,
    min_gap_days: float,
    min_episodes: int,
    min_duration: int,
    top_categories: int,
    cap: int,
    target: int,
    seed: int,
) -> None:
    """Run the multi-stage filtering funnel and emit filter_report.json."""
    from .corpus import load_episodes, write_episodes
    from .filtering import FilterParams, run_filter_pipeline

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus = list(load_episodes(in_path))
    params = FilterParams(
        min_gap_days=min_gap_days,
        min_episodes=min_episodes,
        min_duration_seconds=min_duration,
        top_categories=top_categories,
        cap_per_title=cap,
        target_size=target,
        seed=seed,
    )
    kept, report = run_filter_pipeline(corpus, params)
    write_episodes(kept, out / "episodes.jsonl")
    report.write(out / "filter_report.json")
    click.echo(f"{len(corpus)} -> {len(kept)} episodes; report at {out / 'filter_report.json'}")


@main.command()
@click.option("--chunks", "chunks_path", required=True, type=click.Path(exists=True))
@click.option("--episodes", "episodes_path", required=True, type=click.Path(exists=True))
@click.option("--tagger", default="fallback", show_default=True, help="named tagger or 'fallback'")
@click.option("--top-k", default=30000, show_default=True)
@click.option("--damping", default=0.85, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--timeseries", "series_entities", multiple=True, help="entity to dump a day series for")
def entities(
    chunks_path: str,
    episodes_path: str,
    tagger: str,
    top_k: int,
    damping: float,
    out_dir: str,
    series_entities: tuple[str, ...],
) -> None:
    """Rank entities by PageRank over the podcast-entity graph."""
    from .corpus import load_episodes, read_chunks
    from .entities import (
        DictionaryTagger,
        build_graph,
        entity_timeseries,
        entity_types,
        extract_mentions,
        mention_totals,
        pagerank,
        top_k_entities,
    )
    from .synth import DEFAULT_GAZETTEER

    if tagger != "fallback":
        raise click.ClickException(f"unknown tagger {tagger!r}; only 'fallback' ships built in")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    episodes = {ep.episode_id: ep for ep in load_episodes(episodes_path)}
    chunks = read_chunks(chunks_path)
    mentions = extract_mentions(chunks, DictionaryTagger(DEFAULT_GAZETTEER), episodes, group_by_title=True)
    graph = build_graph(mentions)
    if graph.n_nodes == 0:
        raise click.ClickException("no entity mentions found")
    scores = pagerank(graph, damping=damping)
    ranked = top_k_entities(scores, top_k)
    totals = mention_totals(mentions)
    types = entity_types(mentions)
    with open(out / "entities.tsv", "w", encoding="utf-8") as fh:
        fh.write("entity\ttype\tpagerank\traw_count\n")
        for name, score in ranked:
            fh.write(f"{name}\t{types.get(name, 'OTHER')}\t{score:.6g}\t{totals.get(name, 0)}\n")
    if series_entities:
        series_dir = out / "timeseries"
        series_dir.mkdir(exist_ok=True)
        episode_mentions = extract_mentions(chunks, DictionaryTagger(DEFAULT_GAZETTEER), episodes)
        for entity in series_entities:
            series = entity_timeseries(episode_mentions, entity.lower(), bucket="day")
            with open(series_dir / f"{entity.lower()}.tsv", "w", encoding="utf-8") as fh:
                fh.write("date\tcount\n")
                for day, count in series:
                    fh.write(f"{day.isoformat()}\t{count}\n")
    click.echo(f"ranked {len(ranked)} entities (pagerank converged={scores.converged})")


@main.command()
@click.option("--chunks", "chunks_path", required=True, type=click.Path(exists=True))
@click.option("--episodes", "episodes_path", required=True, type=click.Path(exists=True))
@click.option("--category", default="all", show_default=True)
@click.option("--min-topic-size", default=15, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
def topics(chunks_path: str, episodes_path: str, category: str, min_topic_size: int, out_dir: str) -> None:
    """Per-category topic models plus topic-entity correlation reports."""
    from .corpus import load_episodes, read_chunks
    from .entities import DictionaryTagger, extract_mentions
    from .synth import DEFAULT_GAZETTEER
    from .topics import HashingEmbedder, IdentityReducer, ThresholdClusterer, fit_topics, topic_entity_correlation

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    episodes = {ep.episode_id: ep for ep in load_episodes(episodes_path)}
    chunks = read_chunks(chunks_path)
    by_category: dict[str, list] = {}
    for c in chunks:
        ep = episodes.get(c.episode_id)
        if ep is None:
            continue
        by_category.setdefault(ep.primary_category, []).append(c)
    wanted = sorted(by_category) if category == "all" else [category]
    for cat in wanted:
        cat_chunks = by_category.get(cat, [])
        if not cat_chunks:
            click.echo(f"skipping {cat!r}: no chunks")
            continue
        result = fit_topics(
            cat_chunks,
            HashingEmbedder(),
            IdentityReducer(),
            ThresholdClusterer(),
            min_topic_size=min_topic_size,
            category=cat,
        )
        safe = cat.replace("/", "_").replace(" ", "_")
        (out / f"topics_{safe}.json").write_text(json.dumps(result.to_json(), indent=2) + "\n", encoding="utf-8")
        mentions = extract_mentions(cat_chunks, DictionaryTagger(DEFAULT_GAZETTEER), episodes)
        report = topic_entity_correlation(result, mentions, cat_chunks)
        report.write_tsv(out / f"correlations_{safe}.tsv")
        click.echo(f"{cat}: {len(result.topics)} topics over {len(cat_chunks)} chunks")


@main.command()
@click.option("--chunks", "chunks_path", required=True, type=click.Path(exists=True))
@click.option("--endpoint", default="", help="chat-completions URL; empty = offline stub")
@click.option("--model", default="", help="model name passed to the endpoint")
@click.option("--template", "template_path", type=click.Path(exists=True), help="prompt template file")
@click.option("--max-inflight", default=8, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def prompt(chunks_path: str, endpoint: str, model: str, template_path: str | None, max_inflight: int, out_path: str) -> None:
    """Zero-shot frame labeling of chunks, audited for hallucinated phrases."""
    from .corpus import read_chunks
    from .prompting import HttpChatClient, RuleStubClient, annotate_chunks, default_template, write_predictions

    chunks = read_chunks(chunks_path)
    template = Path(template_path).read_text(encoding="utf-8") if template_path else default_template()
    client = HttpChatClient(endpoint, model=model) if endpoint else RuleStubClient()
    predictions = annotate_chunks(chunks, client, template, max_inflight=max_inflight)
    n = write_predictions(predictions, out_path)
    click.echo(f"wrote {n} audited predictions to {out_path}")


@main.command()
@click.option("--chunks", "chunks_path", required=True, type=click.Path(exists=True))
@click.option("--lexicons", "lexicon_dir", type=click.Path(exists=True), help="override lexicon directory")
@click.option("--out", "out_path", required=True, type=click.Path())
def features(chunks_path: str, lexicon_dir: str | None, out_path: str) -> None:
    """Extract the per-chunk textual feature vectors."""
    from .corpus import read_chunks
    from .features import extract_features, load_lexicons, write_features_tsv

    lexicons = load_lexicons(lexicon_dir)
    chunks = read_chunks(chunks_path)
    vectors = [extract_features(c.text, lexicons=lexicons) for c in chunks]
    write_features_tsv([c.chunk_id for c in chunks], vectors, out_path)
    click.echo(f"wrote {len(vectors)} feature rows to {out_path}")


@main.command()
@click.option("--features", "features_path", required=True, type=click.Path(exists=True))
@click.option("--human", "human_path", required=True, type=click.Path(exists=True), help="gold jsonl")
@click.option("--llm", "llm_path", required=True, type=click.Path(exists=True), help="predictions jsonl")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--svg/--no-svg", default=False, show_default=True, help="also emit bar-chart SVGs")
def importance(features_path: str, human_path: str, llm_path: str, seed: int, out_dir: str, svg: bool) -> None:
    """Contrast feature-importance rankings between human and LLM labels."""
    import numpy as np

    from .features import read_features_tsv
    from .goldio import load_gold
    from .importance import MODEL_KINDS, abstract_vs_objective_summary, train_and_rank, write_contrast_markdown
    from .prompting import read_predictions

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ids, matrix = read_features_tsv(features_path)
    human_labels = {r.chunk_id: r.frame.value for r in load_gold(human_path)}
    llm_labels = {p.chunk_id: p.frame.value for p in read_predictions(llm_path) if p.frame}
    reports = {}
    for source, labels in (("human", human_labels), ("llm", llm_labels)):
        keep = [i for i, cid in enumerate(ids) if cid in labels]
        if len(keep) < 2:
            raise click.ClickException(f"not enough labeled rows for source {source!r}")
        X = matrix[np.asarray(keep)]
        y = [labels[ids[i]] for i in keep]
        for model in MODEL_KINDS:
            report = train_and_rank(X, y, model=model, seed=seed, label_source=source)
            report.write_tsv(out / f"importance_{source}_{model}.tsv")
            reports[(source, model)] = report
    contrast = abstract_vs_objective_summary(reports[("human", "random_forest")], reports[("llm", "random_forest")])
    write_contrast_markdown(
        contrast,
        [reports[("human", "random_forest")], reports[("llm", "random_forest")]],
        out / "contrast.md",
    )
    if svg:
        from .viz import write_bar_svg

        for (source, model), report in reports.items():
            if model != "random_forest":
                continue
            write_bar_svg(report.ranking[:12], out / f"importance_{source}.svg", title=f"{source} feature priority")
    click.echo(f"wrote importance reports to {out_dir}")


@main.command()
@click.option("--gold", "gold_path", required=True, type=click.Path(exists=True))
@click.option("--epochs", default=30, show_default=True)
@click.option("--lambda", "lambda_span", default=1.0, show_default=True, help="span-loss weight")
@click.option("--seed", default=0, show_default=True)
@click.option("--eval-fraction", default=0.2, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
def train(gold_path: str, epochs: int, lambda_span: float, seed: int, eval_fraction: float, out_dir: str) -> None:
    """Fine-tune the two-head encoder on gold annotations."""
    from .goldio import load_gold
    from .multitask import WordTokenizer, build_examples, stratified_split
    from .multitask import train as train_model

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    gold = load_gold(gold_path)
    tokenizer = WordTokenizer.build(r.text for r in gold)
    examples = build_examples(gold, tokenizer)
    train_set, eval_set = stratified_split(examples, eval_fraction=eval_fraction, seed=seed)
    if not eval_set:
        eval_set = train_set
    _, result = train_model(
        train_set,
        epochs=epochs,
        lambda_span=lambda_span,
        seed=seed,
        eval_examples=eval_set,
        tokenizer=tokenizer,
        checkpoint_dir=out,
    )
    for epoch in sorted(result.metrics_by_epoch):
        m = result.metrics_by_epoch[epoch]
        click.echo(f"epoch {epoch}: frame_acc={m.frame_accuracy:.3f} span_f1={m.span_f1:.3f} loss={m.loss_total:.4f}")
    click.echo(f"checkpoints and run_manifest.json in {out_dir}")


@main.command()
@click.option("--checkpoint", "checkpoint_path", required=True, type=click.Path(exists=True))
@click.option("--chunks", "chunks_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--batch-size", default=32, show_default=True)
def infer(checkpoint_path: str, chunks_path: str, out_path: str, batch_size: int) -> None:
    """Corpus-scale frame inference; resumable over an interrupted output file."""
    from .corpus import read_chunks
    from .multitask import load_checkpoint, predict_batch

    model, tokenizer = load_checkpoint(checkpoint_path)
    chunks = read_chunks(chunks_path)
    n = 0
    for _ in predict_batch(model, tokenizer, chunks, batch_size=batch_size, out_path=out_path):
        n += 1
    click.echo(f"{n} predictions in {out_path}")


@main.command()
@click.option("--patterns", "patterns_path", type=click.Path(exists=True), help="entity pattern JSON")
@click.option("--predictions", "predictions_path", required=True, type=click.Path(exists=True))
@click.option("--chunks", "chunks_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--svg/--no-svg", default=False, show_default=True)
def analyze(patterns_path: str | None, predictions_path: str, chunks_path: str, out_dir: str, svg: bool) -> None:
    """Entity-conditioned frame distributions and the plausibility report."""
    from .analytics import (
        analyze_entities,
        load_patterns,
        patterns_hash,
        write_distributions_tsv,
        write_plausibility_markdown,
    )
    from .corpus import read_chunks
    from .multitask import read_frame_predictions

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    patterns = load_patterns(patterns_path)
    chunks = read_chunks(chunks_path)
    predictions = {p.chunk_id: p.frame for p in read_frame_predictions(predictions_path)}
    distributions, rows = analyze_entities(chunks, predictions, patterns)
    write_distributions_tsv(distributions, out / "entity_frames.tsv")
    write_plausibility_markdown(rows, out / "plausibility.md", config_hash=patterns_hash(patterns))
    if svg:
        from .viz import write_stacked_frames_svg

        data = [(d.entity, {f.value: d.proportions[f] for f in d.proportions}) for d in distributions]
        write_stacked_frames_svg(data, out / "entity_frames.svg", title="Frame distribution by entity")
    click.echo(f"wrote entity_frames.tsv and plausibility.md to {out_dir}")


@main.command()
@click.option("--db", "db_path", default="annotations.db", show_default=True)
@click.option("--chunks", "chunks_path", type=click.Path(exists=True), help="seed tasks: chunk store")
@click.option("--predictions", "predictions_path", type=click.Path(exists=True), help="seed tasks: predictions")
@click.option("--port", default=8000, show_default=True)
@click.option("--quota", default=100, show_default=True)
@click.option("--static", "static_dir", type=click.Path(), help="built UI assets to serve at /ui")
@click.option("--token", default=None, help="require this bearer token on the API")
def serve(
    db_path: str,
    chunks_path: str | None,
    predictions_path: str | None,
    port: int,
    quota: int,
    static_dir: str | None,
    token: str | None,
) -> None:
    """Run the annotation review service."""
    import uvicorn

    from .service import AnnotationStore, create_app, load_tasks_from_files

    store = AnnotationStore(db_path)
    if chunks_path and predictions_path:
        n = load_tasks_from_files(store, chunks_path, predictions_path)
        click.echo(f"seeded {n} tasks")
    app = create_app(store, quota=quota, static_dir=static_dir, token=token)
    uvicorn.run(app, host="127.0.0.1", port=port)


if __name__ == "__main__":
    main(sys.argv[1:])
