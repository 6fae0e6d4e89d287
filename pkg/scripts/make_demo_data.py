"""Generate the small demo dataset used by configs/demo.config.

Writes corpus.jsonl, annotations.csv, and vectors.qemb into data/demo
(or a directory of your choosing).  The dataset is synthetic but shaped
like a real chat export: three annotators with a little disagreement,
two well separated classes, and embeddings small enough that the whole
demo pipeline finishes in about a second.
"""

import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from topicality.corpus import save_annotations, save_corpus
from topicality.embeddings import write_embeddings
from topicality.synthetic import SyntheticSpec, generate


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="data/demo", help="output directory")
    ap.add_argument("--n", type=int, default=300)
    ap.add_argument("--dim", type=int, default=40)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    spec = SyntheticSpec(
        n_samples=args.n,
        dim=args.dim,
        n_informative=max(4, args.dim // 4),
        class_separation=1.6,
        annotators=3,
        annotator_noise=0.05,
        seed=args.seed,
    )
    corpus, annotations, emb = generate(spec)

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_corpus(corpus, out / "corpus.jsonl")
    save_annotations(annotations, out / "annotations.csv")
    write_embeddings(emb, out / "vectors.qemb")
    print(f"wrote {len(corpus.messages)} messages to {out}/")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
