"""CLI: embed --in corpus.jsonl --out vectors.qemb [--model ID] [--batch N].

Exit codes: 0 all messages embedded, 1 some messages skipped, 2 job failed.
"""

from __future__ import annotations

import argparse
import sys

from embedder.core import DEFAULT_MODEL, EmbedError, EmbedJob, embed_corpus
from topicality.errors import ValidationError


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="embed", description=__doc__)
    parser.add_argument("--in", dest="corpus", required=True, help="corpus JSONL/CSV path")
    parser.add_argument("--out", required=True, help="QEMB output path")
    parser.add_argument("--model", default=DEFAULT_MODEL, help="sentence-transformer model id")
    parser.add_argument("--batch", type=int, default=32, help="encoding batch size")
    args = parser.parse_args(argv)

    job = EmbedJob(
        corpus_path=args.corpus,
        output_path=args.out,
        model_id=args.model,
        batch_size=args.batch,
    )
    try:
        result = embed_corpus(job)
    except (EmbedError, ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(
        f"embedded {result.embedded} messages ({result.dim} dims, "
        f"model {result.model_name}) -> {args.out}"
    )
    if result.skipped:
        shown = ", ".join(result.skipped[:5])
        more = f" (+{len(result.skipped) - 5} more)" if len(result.skipped) > 5 else ""
        print(f"skipped {len(result.skipped)} message(s): {shown}{more}", file=sys.stderr)
        return 1
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
