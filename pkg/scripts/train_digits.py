"""Train and convert the bundled 64-128-10 digits classifier.

Uses scikit-learn's bundled 8x8 digits (1797 images): 797 for training,
the remaining 1000 as the SNN test set. The ANN is a bias-free ReLU MLP
trained with plain minibatch SGD on softmax cross-entropy; conversion to a
spiking net rescales each layer by the 99.9th percentile of its training
activations so every threshold is 1.0.

    python scripts/train_digits.py --out-dir data
"""

import argparse
from pathlib import Path

import numpy as np
from sklearn.datasets import load_digits

from probspike.encoding import Dataset, save_dataset
from probspike.netio import load_text_network, save_network, save_text_network


def train(x, y, hidden, epochs, lr, seed):
    rs = np.random.default_rng(seed)
    w1 = rs.normal(0, np.sqrt(2 / x.shape[1]), (x.shape[1], hidden))
    w2 = rs.normal(0, np.sqrt(2 / hidden), (hidden, 10))
    onehot = np.eye(10)[y]
    for epoch in range(epochs):
        order = rs.permutation(len(x))
        for s in range(0, len(x), 32):
            b = order[s : s + 32]
            h = np.maximum(x[b] @ w1, 0)
            z = h @ w2
            p = np.exp(z - z.max(axis=1, keepdims=True))
            p /= p.sum(axis=1, keepdims=True)
            dz = (p - onehot[b]) / len(b)
            dh = (dz @ w2.T) * (h > 0)
            w2 -= lr * h.T @ dz
            w1 -= lr * x[b].T @ dh
    return w1, w2


def normalize(x, w1, w2, pct=99.9):
    h = np.maximum(x @ w1, 0)
    lam1 = np.percentile(h[h > 0], pct)
    z = np.maximum((h / lam1) @ w2, 0)
    lam2 = np.percentile(z[z > 0], pct)
    return w1 / lam1, w2 / lam2


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out-dir", default="data")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--hidden", type=int, default=128)
    ap.add_argument("--epochs", type=int, default=60)
    ap.add_argument("--lr", type=float, default=0.05)
    args = ap.parse_args()

    digits = load_digits()
    x = digits.data / 16.0
    y = digits.target
    order = np.random.default_rng(args.seed).permutation(len(x))
    tr, te = order[:797], order[797:]

    w1, w2 = train(x[tr], y[tr], args.hidden, args.epochs, args.lr, args.seed)
    ann = np.argmax(np.maximum(x[te] @ w1, 0) @ w2, axis=1)
    print(f"ANN test accuracy: {np.mean(ann == y[te]):.4f}")

    w1, w2 = normalize(x[tr], w1, w2)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    txt = out / "digits_fc.txt"
    save_text_network(txt, [64, args.hidden, 10], [w1, w2], [1.0, 1.0])
    save_network(load_text_network(txt), out / "digits_fc.snn")
    save_dataset(Dataset(y[te], x[te]), out / "digits_test.csv")
    print(f"wrote {txt}, {out / 'digits_fc.snn'}, {out / 'digits_test.csv'}")


if __name__ == "__main__":
    main()
