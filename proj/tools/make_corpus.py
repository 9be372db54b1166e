"""Regenerates data/corpus.txt: the most frequent lowercase a-z English words.

Requires the `wordfreq` package. Usage: python3 tools/make_corpus.py [count]
"""
import sys
from pathlib import Path

from wordfreq import top_n_list


def main() -> None:
    count = int(sys.argv[1]) if len(sys.argv) > 1 else 3000
    words, seen = [], set()
    for w in top_n_list("en", 50000):
        ok = w.isascii() and w.isalpha() and w.islower() and (len(w) > 1 or w in ("a", "i"))
        if ok and w not in seen:
            seen.add(w)
            words.append(w)
        if len(words) == count:
            break
    out = Path(__file__).resolve().parent.parent / "data" / "corpus.txt"
    out.write_text("\n".join(words) + "\n")
    print(f"wrote {len(words)} words to {out}")


if __name__ == "__main__":
    main()
