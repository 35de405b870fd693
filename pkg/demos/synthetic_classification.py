"""Train all five classifiers on the synthetic corpus and compare them.

Run with ``python3 demos/synthetic_classification.py``.  Takes about a minute.
"""

from refdoc.pipeline import SMALL_GRIDS, run_experiment
from refdoc.synthetic import synthetic_corpus


def main():
    corpus = synthetic_corpus(1000, seed=42)
    print(f"{len(corpus)} labeled messages, e.g. {corpus[0].commit.message!r} -> {corpus[0].label}")
    result = run_experiment(corpus, grids=SMALL_GRIDS, seed=42, k_folds=10)

    print(f"\n{'model':<5} {'cv':>6} {'test':>6}  best settings")
    for kind, report in result["reports"].items():
        params = result["best"][kind].as_dict()
        print(f"{kind:<5} {result['cv_score'][kind]:6.3f} {report.micro_f1:6.3f}  {params}")

    rf = result["reports"]["RF"]
    print("\nRF per category (precision / recall / f1):")
    for cat, (p, r, f) in rf.per_category.items():
        print(f"  {cat.name:<11} {p:.2f} / {r:.2f} / {f:.2f}")

    print("\nMcNemar, RF against each other model:")
    for kind, res in result["mcnemar"].items():
        print(f"  RF vs {kind:<4} b={res.b:<3} c={res.c:<3} p={res.p_value:.4f} ({res.method})")


if __name__ == "__main__":
    main()
