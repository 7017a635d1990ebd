"""Cross-validated fairness training with each penalizer on the synthetic leakage dataset."""
import argparse

from hgrkb.fairtrain import TrainConfig, cross_validate, fairness_dataset


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--tau", type=float, default=0.3)
    p.add_argument("--folds", type=int, default=5)
    args = p.parse_args()

    data = fairness_dataset(args.n, seed=0)
    print(f"{'penalizer':<10}{'R2 train':>16}{'R2 val':>16}{'HGR-KB val':>16}{'HGR-SK val':>16}")
    for pen in ("none", "hgr_kb", "hgr_sk"):
        cfg = TrainConfig(penalizer=pen, tau=args.tau, epochs=args.epochs)
        s = cross_validate(data, cfg, args.folds)["summary"]
        cells = [s[k] for k in ("score_train", "score_val", "hgr_kb_val", "hgr_sk_val")]
        print(f"{pen:<10}" + "".join(f"{c['mean']:9.3f} ± {c['std']:.3f}" for c in cells))


if __name__ == "__main__":
    main()
