#!/usr/bin/env python3
"""Generate the bundled synthetic corpora.

Sentences come from a topic-modulated class-bigram source: a class chain gives
local syntax, and a per-sentence topic reweights word emissions so that words
far apart in a sentence are correlated. Output is deterministic in --seed.

    python3 tools/gen_synth_corpus.py --out data
"""

import argparse
import os

import numpy as np


def make_source(rng, n_words, n_classes, n_topics):
    # Class chain: each class has a handful of likely successors.
    trans = rng.dirichlet(np.full(n_classes, 0.08), size=n_classes)
    start = rng.dirichlet(np.full(n_classes, 0.5))
    word_class = np.arange(n_words) % n_classes
    rng.shuffle(word_class)
    base = 1.0 / (1.0 + np.arange(n_words)) ** 0.9  # Zipf-like
    rng.shuffle(base)
    # Every topic favours a random fifth of the vocabulary.
    boost = np.where(rng.random((n_topics, n_words)) < 0.2, 12.0, 0.4)
    emit = []
    for t in range(n_topics):
        w = base * boost[t]
        per_class = []
        for c in range(n_classes):
            ids = np.flatnonzero(word_class == c)
            p = w[ids] / w[ids].sum()
            per_class.append((ids, np.cumsum(p)))
        emit.append(per_class)
    return start, trans, emit


def sample_sentence(rng, source, min_len, max_len):
    start, trans, emit = source
    topic = rng.integers(len(emit))
    n = rng.integers(min_len, max_len + 1)
    c = rng.choice(len(start), p=start)
    words = []
    for _ in range(n):
        ids, cdf = emit[topic][c]
        words.append(ids[min(np.searchsorted(cdf, rng.random()), len(ids) - 1)])
        c = rng.choice(len(start), p=trans[c])
    return words


def write(path, sentences):
    with open(path, "w") as f:
        for s in sentences:
            f.write(" ".join("w%d" % w for w in s) + "\n")


def corpus(rng, out_dir, n_words, n_classes, n_topics, sizes, min_len, max_len):
    source = make_source(rng, n_words, n_classes, n_topics)
    os.makedirs(out_dir, exist_ok=True)
    for name, count in sizes:
        sents = [sample_sentence(rng, source, min_len, max_len) for _ in range(count)]
        write(os.path.join(out_dir, name + ".txt"), sents)
        print("%s/%s.txt: %d sentences, %d tokens"
              % (out_dir, name, count, sum(len(s) for s in sents)))


def main():
    ap = argparse.ArgumentParser(description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="data")
    ap.add_argument("--seed", type=int, default=20)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    corpus(rng, os.path.join(args.out, "synth"), 2000, 40, 12,
           [("train", 6700), ("dev", 400), ("test", 400)], 5, 25)
    corpus(rng, os.path.join(args.out, "tiny"), 30, 5, 3,
           [("train", 300), ("dev", 40), ("test", 40)], 2, 8)


if __name__ == "__main__":
    main()
