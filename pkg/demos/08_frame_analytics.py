"""Entity-conditioned frame distributions and the plausibility assessment."""
import random

from framescope.analytics import analyze_entities, load_patterns
from framescope.corpus import ChunkRecord
from framescope.frames import FRAMES, Frame

rng = random.Random(2)

# a corpus-scale prediction table, biased per entity like real discourse
texts = {
    "jesus": ("talking about jesus and forgiveness", [Frame.MORAL] * 75 + [Frame.SOCIAL] * 25),
    "covid": ("covid cases and the lockdown economy", [Frame.HEALTH] * 40 + [Frame.SOCIAL] * 35 + [Frame.FINANCIAL] * 25),
    "crypto": ("bitcoin and crypto markets again", [Frame.FINANCIAL] * 65 + [Frame.SOCIAL] * 35),
}
chunks, predictions = [], {}
i = 0
for _, (text, labels) in texts.items():
    for label in labels:
        cid = f"c{i:04d}"
        chunks.append(ChunkRecord(cid, "e", i, text, len(text.split()), 0, len(text)))
        predictions[cid] = label
        i += 1

patterns = load_patterns()  # packaged, reviewed variant lists
distributions, rows = analyze_entities(chunks, predictions, patterns)

print(f"{'entity':<16} {'chunks':>7}  " + "  ".join(f"{f.value:>9}" for f in FRAMES))
for dist in distributions:
    if dist.chunk_count == 0:
        continue
    shares = "  ".join(f"{dist.proportions[f]:>9.2f}" for f in FRAMES)
    print(f"{dist.entity:<16} {dist.chunk_count:>7}  {shares}")

print("\nplausibility against expected real-world associations:")
for row in rows:
    if row.dominant_frame is None and row.status == "flag" and "no matched" in row.note:
        continue
    dominant = row.dominant_frame.value if row.dominant_frame else "-"
    note = f" ({row.note})" if row.note else ""
    print(f"  {row.entity:<16} dominant={dominant:<10} {row.status}{note}")
