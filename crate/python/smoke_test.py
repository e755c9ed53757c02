"""Build the elite stub world, index it and rank substitutes through the
Python bindings."""

import json
import sys
import tempfile
from pathlib import Path

import lexsimp_py as lx


def main() -> int:
    with tempfile.TemporaryDirectory() as tmp:
        d = Path(tmp)
        lx.write_world("elite", str(d))
        vocab = (d / "vocab.txt").read_text().split()
        n = lx.build_index(
            str(d / "fixture.json"),
            str(d / "corpus.txt"),
            str(d / "index.json"),
            profile_name="elite",
            config=str(d / "profiles.toml"),
            vocab=vocab,
            targets=["elite"],
        )
        p = lx.Pipeline(
            str(d / "fixture.json"),
            str(d / "corpus.txt"),
            str(d / "index.json"),
            profile_name="elite",
            config=str(d / "profiles.toml"),
            freq_table=str(d / "freq.tsv"),
        )
        sentence, target = (d / "gold.tsv").read_text().split("\t")[:2]
        ranked = p.simplify(sentence, target)
        record = json.loads(p.simplify_json(sentence, target, mode="none"))
        scores = lx.evaluate({"1": ranked}, [(sentence, target, ["class", "establishment"])])

    print(f"index entries: {n}")
    print("top 5:", ranked[:5])
    print("no-clustering weights:", record["clusters"]["effective"])
    print("ACC@1:", scores["ACC@1"])
    assert ranked[0] == "class"
    assert record["clusters"]["raw"] == [0, 5, 1, 0]
    assert scores["ACC@1"] == 1.0
    assert lx.ensemble([{"1": ["a", "b"]}, {"1": ["b", "a"]}]) == {"1": ["a", "b"]}
    print("ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())
