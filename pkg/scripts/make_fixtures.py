#!/usr/bin/env python3
"""Regenerate the shipped fixture datasets under src/hfrag/data/.

toy/       12 claims, 30 passages, 20 labeled examples, hand qrels, and runs
           from two rankers per source: BM25 (this package) and a character
           trigram Jaccard ranker standing in for a second, non-lexical model.
monotone/  6 claims, all gold SUPPORTS, with hand-built runs. Beyond each
           claim's first labeled exemplar, every labeled exemplar is a
           SUPPORTS example, so a larger context can only add SUPPORTS votes.

Output is deterministic; rerunning must not change any file.
"""

from __future__ import annotations

import json
from pathlib import Path

from hfrag.bm25 import Bm25Params, build_index, labeled_documents, search
from hfrag.core import LabeledExample, Passage, RankedRun, RunEntry, Source, write_run_file

ROOT = Path(__file__).resolve().parents[1] / "src" / "hfrag" / "data"
DEPTH = 50

CLAIMS = [
    ("c01", "Global warming is causing the extinction of polar bears.", "SUPPORTS"),
    ("c02", "Polar bear populations are growing rapidly because sea ice is melting.", "REFUTES"),
    ("c03", "The measles vaccine prevents measles infection in most children.", "SUPPORTS"),
    ("c04", "Vaccines cause autism in young children.", "REFUTES"),
    ("c05", "Apollo 11 landed astronauts on the Moon in 1969.", "SUPPORTS"),
    ("c06", "The Moon landing footage was filmed in a Hollywood studio.", "REFUTES"),
    ("c07", "Drinking coffee every day cures liver disease.", "NOT_ENOUGH_INFO"),
    ("c08", "Coffee was first cultivated in Antarctica.", "REFUTES"),
    ("c09", "The Great Wall of China is visible from the Moon with the naked eye.", "REFUTES"),
    ("c10", "The Great Wall of China was built over many centuries.", "SUPPORTS"),
    ("c11", "The Eiffel Tower was painted green by its architect in 2020.", "NOT_ENOUGH_INFO"),
    ("c12", "The Eiffel Tower is located in Paris, France.", "SUPPORTS"),
]

LABELED = [
    ("l01", "Polar bears are threatened by the loss of Arctic sea ice.", "SUPPORTS", "Sea ice loss reduces hunting grounds."),
    ("l02", "Brown bears are close to extinction in parts of Europe.", "SUPPORTS", None),
    ("l03", "Global warming has no effect on Arctic animals.", "REFUTES", None),
    ("l04", "Polar bear numbers have doubled since the sea ice melted.", "REFUTES", None),
    ("l05", "The measles vaccine is effective at preventing infection.", "SUPPORTS", "Two doses are about 97 percent effective."),
    ("l06", "Vaccines are linked to autism.", "REFUTES", "Large studies found no link."),
    ("l07", "Children receive the measles vaccine in two doses.", "SUPPORTS", None),
    ("l08", "Apollo 11 was the first crewed Moon landing.", "SUPPORTS", None),
    ("l09", "The Moon landing was staged in a film studio.", "REFUTES", None),
    ("l10", "Neil Armstrong walked on the Moon in 1969.", "SUPPORTS", None),
    ("l11", "Coffee consumption is associated with lower liver disease risk.", "NOT_ENOUGH_INFO", None),
    ("l12", "Coffee plants originated in Ethiopia.", "SUPPORTS", None),
    ("l13", "Coffee grows in Antarctica.", "REFUTES", None),
    ("l14", "The Great Wall of China can be seen from the Moon.", "REFUTES", None),
    ("l15", "The Great Wall of China was built by several dynasties over centuries.", "SUPPORTS", None),
    ("l16", "The Eiffel Tower is in Paris.", "SUPPORTS", None),
    ("l17", "The Eiffel Tower was repainted a new colour in 2020.", "NOT_ENOUGH_INFO", None),
    ("l18", "Gustave Eiffel's company designed the Eiffel Tower.", "SUPPORTS", None),
    ("l19", "Sea ice in the Arctic is expanding every year.", "REFUTES", None),
    ("l20", "Hollywood studios produce many science fiction films.", "NOT_ENOUGH_INFO", None),
]

PASSAGES = [
    ("p01", "Polar bear", "The polar bear is a large bear native to the Arctic Circle that depends on sea ice to hunt seals."),
    ("p02", "Polar bear", "Climate change and the loss of sea ice threaten polar bear populations; the species is listed as vulnerable to extinction."),
    ("p03", "Extinction", "Extinction is the termination of a species. Global warming is a growing driver of extinction risk for many species."),
    ("p04", "Brown bear", "The brown bear is found across much of northern Eurasia and North America."),
    ("p05", "Arctic sea ice decline", "Arctic sea ice has declined sharply in recent decades because of global warming."),
    ("p06", "Measles vaccine", "The measles vaccine is very effective at preventing measles; two doses protect about 97 percent of children."),
    ("p07", "Vaccines and autism", "Extensive research has found no link between vaccines and autism in children."),
    ("p08", "Measles", "Measles is a highly contagious viral disease that mostly affects young children."),
    ("p09", "Vaccination schedule", "Children usually receive vaccines against several diseases in their first years."),
    ("p10", "Autism", "Autism is a neurodevelopmental condition whose signs usually appear in early childhood."),
    ("p11", "Apollo 11", "Apollo 11 was the spaceflight that first landed humans on the Moon, on 20 July 1969."),
    ("p12", "Moon landing conspiracy theories", "Claims that the Moon landings were faked in a film studio have been thoroughly debunked."),
    ("p13", "Neil Armstrong", "Neil Armstrong was the first astronaut to walk on the Moon."),
    ("p14", "Hollywood", "Hollywood is a neighbourhood of Los Angeles known as the home of the American film industry."),
    ("p15", "Moon", "The Moon is the only natural satellite of Earth."),
    ("p16", "Coffee", "Coffee is a beverage brewed from roasted coffee beans; the plant originated in Ethiopia."),
    ("p17", "Coffee and health", "Some studies associate moderate coffee drinking with a lower risk of liver disease, but no cure has been shown."),
    ("p18", "Antarctica", "Antarctica is the coldest continent and has no native agriculture."),
    ("p19", "Coffee production", "Coffee is cultivated in tropical regions of Africa, Asia and Latin America."),
    ("p20", "Liver disease", "Liver disease covers many conditions that damage the liver."),
    ("p21", "Great Wall of China", "The Great Wall of China was built by successive dynasties over many centuries."),
    ("p22", "Great Wall visibility", "The Great Wall of China is not visible from the Moon with the naked eye."),
    ("p23", "China", "China is a country in East Asia with a long recorded history."),
    ("p24", "Ming dynasty", "Much of the existing wall was rebuilt during the Ming dynasty."),
    ("p25", "Naked eye", "Naked eye observation means seeing without optical instruments such as telescopes."),
    ("p26", "Eiffel Tower", "The Eiffel Tower is a wrought-iron lattice tower in Paris, France."),
    ("p27", "Gustave Eiffel", "Gustave Eiffel was a French engineer whose company built the Eiffel Tower; he died in 1923."),
    ("p28", "Eiffel Tower paint", "The Eiffel Tower is repainted every few years; its colour is a bronze brown."),
    ("p29", "Paris", "Paris is the capital and largest city of France."),
    ("p30", "Green", "Green is the colour between blue and yellow in the visible spectrum."),
]

QRELS = {
    "c01": {"p02": 2, "p03": 1, "p05": 1},
    "c02": {"p02": 2, "p05": 1},
    "c03": {"p06": 2, "p08": 1},
    "c04": {"p07": 2, "p10": 1},
    "c05": {"p11": 2, "p13": 1},
    "c06": {"p12": 2, "p11": 1},
    "c07": {"p17": 2, "p20": 1},
    "c08": {"p19": 2, "p16": 1, "p18": 1},
    "c09": {"p22": 2, "p21": 1},
    "c10": {"p21": 2, "p24": 1},
    "c11": {"p28": 2, "p27": 1},
    "c12": {"p26": 2, "p29": 1},
}


def trigrams(text: str) -> set[str]:
    s = " " + " ".join(text.lower().split()) + " "
    return {s[i : i + 3] for i in range(len(s) - 2)}


def trigram_run(qid: str, query: str, docs: list[Passage], source: Source) -> RankedRun:
    q = trigrams(query)
    scored = []
    for d in docs:
        t = trigrams(d.text)
        sim = len(q & t) / len(q | t)
        if sim > 0:
            scored.append((-round(sim, 6), d.id))
    scored.sort()
    entries = tuple(RunEntry(d, r, -s) for r, (s, d) in enumerate(scored[:DEPTH], start=1))
    return RankedRun(qid, source, "trigram", entries)


def jsonl(records) -> str:
    return "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records)


def write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def make_toy() -> None:
    out = ROOT / "toy"
    write(out / "claims.jsonl", jsonl({"id": i, "text": t, "label": g} for i, t, g in CLAIMS))
    write(
        out / "labeled.jsonl",
        jsonl({"id": i, "claim": c, "label": g, **({"evidence": e} if e else {})} for i, c, g, e in LABELED),
    )
    write(out / "corpus.jsonl", jsonl({"id": i, "title": ti, "text": t} for i, ti, t in PASSAGES))
    write(out / "qrels.txt", "".join(f"{q} 0 {d} {g}\n" for q, docs in QRELS.items() for d, g in docs.items()))

    labeled_docs = labeled_documents(LabeledExample(i, c, g, e) for i, c, g, e in LABELED)  # type: ignore[arg-type]
    passages = [Passage(i, t, ti) for i, ti, t in PASSAGES]
    params = Bm25Params()
    for source, docs in ((Source.LABELED, labeled_docs), (Source.UNLABELED, passages)):
        index = build_index(docs)
        bm = [search(index, params, t, DEPTH, query_id=i, source=source) for i, t, _ in CLAIMS]
        tri = [trigram_run(i, t, docs, source) for i, t, _ in CLAIMS]
        write(out / "runs" / source.value / "bm25.run", write_run_file(bm))
        write(out / "runs" / source.value / "trigram.run", write_run_file(tri))

    write(
        out / "pipeline.yaml",
        "# Toy pipeline config. Paths are relative to this file.\n"
        "output_dir: out\n"
        "claims: claims.jsonl\n"
        "corpus: corpus.jsonl\n"
        "labeled: labeled.jsonl\n"
        "qrels: qrels.txt\n"
        "runs:\n"
        "  labeled: runs/labeled\n"
        "  unlabeled: runs/unlabeled\n"
        "mode: hf_rag\n"
        "k: 10\n"
        "pool_depth: 50\n"
        "missing_rank_m: 1000\n"
        "alpha: 0.5\n"
        "predictor: baseline\n"
        "sweep_sizes: [1, 2, 5, 10]\n",
    )


# Labeled exemplar order per monotone claim. Claims m1-m3 open with a
# non-SUPPORTS exemplar; every later exemplar is SUPPORTS.
MONO_LEAD = {"m1": "x1", "m2": "x2", "m3": "x3"}


def make_monotone() -> None:
    out = ROOT / "monotone"
    claims = [(f"m{i}", f"Monotone fixture claim number {i}.") for i in range(1, 7)]
    support = [f"s{j:02d}" for j in range(1, 13)]
    labeled = [(s, f"Supporting exemplar {s}.", "SUPPORTS") for s in support]
    labeled += [("x1", "Refuting exemplar x1.", "REFUTES"), ("x2", "Refuting exemplar x2.", "REFUTES"),
                ("x3", "Neutral exemplar x3.", "NOT_ENOUGH_INFO")]
    passages = [(f"u{j:02d}", f"Background passage {j}.") for j in range(1, 16)]

    write(out / "claims.jsonl", jsonl({"id": i, "text": t, "label": "SUPPORTS"} for i, t in claims))
    write(out / "labeled.jsonl", jsonl({"id": i, "claim": c, "label": g} for i, c, g in labeled))
    write(out / "corpus.jsonl", jsonl({"id": i, "text": t} for i, t in passages))

    runs = {Source.LABELED: {"ranker_a": [], "ranker_b": []}, Source.UNLABELED: {"ranker_a": [], "ranker_b": []}}
    for n, (qid, _) in enumerate(claims):
        lab = support[n:] + support[:n]
        lead = MONO_LEAD.get(qid)
        order_a = ([lead] if lead else []) + lab[:9]
        order_b = ([lead] if lead else []) + lab[1:9] + lab[:1]
        unl = [p for p, _ in passages]
        unl = unl[n:] + unl[:n]
        unl_a = unl[:10]
        unl_b = unl[2:10] + unl[:2]
        for src, name, docs in (
            (Source.LABELED, "ranker_a", order_a),
            (Source.LABELED, "ranker_b", order_b),
            (Source.UNLABELED, "ranker_a", unl_a),
            (Source.UNLABELED, "ranker_b", unl_b),
        ):
            entries = tuple(RunEntry(d, r, float(len(docs) - r + 1)) for r, d in enumerate(docs, start=1))
            runs[src][name].append(RankedRun(qid, src, name, entries))
    for src, by_ranker in runs.items():
        for name, rs in by_ranker.items():
            write(out / "runs" / src.value / f"{name}.run", write_run_file(rs))
    write(
        out / "pipeline.yaml",
        "# Monotone sweep fixture. Paths are relative to this file.\n"
        "output_dir: out\n"
        "claims: claims.jsonl\n"
        "corpus: corpus.jsonl\n"
        "labeled: labeled.jsonl\n"
        "runs:\n"
        "  labeled: runs/labeled\n"
        "  unlabeled: runs/unlabeled\n"
        "mode: hf_rag\n"
        "sweep_sizes: [1, 2, 5, 10]\n",
    )


if __name__ == "__main__":
    make_toy()
    make_monotone()
    print(f"fixtures written under {ROOT}")
