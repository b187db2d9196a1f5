"""Smoke test for the logicloc_py extension module."""

import math
import os
import tempfile

import logicloc_py as ll


def main():
    clean = ll.Corpus.synth(40, min_lines=10, max_lines=20, seed=1)
    assert len(clean) == 40
    corpus, report = clean.forge(kind="single", mix="table5-s", seed=2)
    assert report["produced"] == 40
    assert all(len(p.error_lines) == 1 for p in corpus)

    program = corpus[0]
    assert len(program.align_scores()) == len(program)
    assert program.graph_dot().startswith("digraph cp {")
    assert ll.lexical_align("len = s.size();", "set len to size of s") == 0.5

    cfg = ll.TrainConfig(epochs=2, dims=6, seed=3)
    model = ll.Model.train(corpus, cfg)
    assert len(model.log) == 2
    out = model.localize(program)
    assert math.isclose(sum(out["probs"]), 1.0, rel_tol=0, abs_tol=1e-9)
    assert sorted(out["ranking"]) == list(range(len(program)))

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "params.json")
        model.save(path)
        again = ll.Model.load(path)
        assert again.localize(program) == out
        corpus.save(os.path.join(d, "c.jsonl"))
        assert ll.Corpus.load(os.path.join(d, "c.jsonl")).to_jsonl() == corpus.to_jsonl()

    check = model.gradient_check(program, coords=50)
    assert check["max_rel_error"] < 1e-4, check

    rankings = [model.localize(p)["ranking"] for p in corpus]
    acc = ll.evaluate(corpus, rankings, ks=[1, 5, 10])["accuracy"]
    assert acc[0] <= acc[1] <= acc[2]

    scores, order = ll.sbfl_scores([[1, 0], [1, 1], [0, 2]], n_pass=2, n_fail=1, method="dstar")
    assert math.isinf(scores[0]) and order == [0, 1, 2]

    folds = corpus.split_folds(4, seed=5)
    assert set(folds.values()) == {0, 1, 2, 3}
    cv = ll.cross_validate(corpus, folds=4, fold_seed=5, config=ll.TrainConfig(epochs=1, dims=4))
    assert len(cv["folds"]) == 4

    try:
        ll.TrainConfig(lr=-1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative learning rate accepted")
    try:
        ll.Corpus.load("/nonexistent/corpus.jsonl")
    except IOError:
        pass
    else:
        raise AssertionError("missing file accepted")

    print("smoke test passed: top-k", [round(a, 3) for a in acc])


if __name__ == "__main__":
    main()
