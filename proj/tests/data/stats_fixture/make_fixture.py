#!/usr/bin/env python3
"""Writes the stats fixture corpus and its brute-force expected statistics.

Run from this directory: python3 make_fixture.py
"""
import json
import random
from collections import Counter

rng = random.Random(20240501)
POOL = ["the", "a", "of", "cell", "gene", "patient", "protein", "study", "data", "was",
        "were", "in", "and", "für", "über", "naïve", "東京", "x", "y", "z", "dose", "risk",
        "model", "rate", "high", "low", "blood", "virus", "test", "group"]
WEIGHTS = [1.0 / (i + 1) for i in range(len(POOL))]


def sentence(length):
    return " ".join(rng.choices(POOL, WEIGHTS, k=length))


def length():
    r = rng.random()
    if r < 0.05:
        return 0
    if r < 0.85:
        return rng.randint(1, 49)
    if r < 0.97:
        return rng.randint(50, 199)
    return rng.randint(200, 230)


splits = {"train": 100, "val": 20, "test": 20}
corpus = {}
for split, n in splits.items():
    corpus[split] = {"src": [sentence(length()) for _ in range(n)],
                     "trg": [sentence(length()) for _ in range(n)]}
    for side, lang in (("src", "de"), ("trg", "en")):
        with open(f"{split}.{lang}", "w", encoding="utf-8") as f:
            f.write("".join(line + "\n" for line in corpus[split][side]))


def bucket(n):
    if n < 50:
        return n
    if n < 200:
        return 50 + (n - 50) // 10
    return 65


def freq_table(counter):
    items = sorted(counter.items(), key=lambda kv: (-kv[1], kv[0].encode("utf-8")))
    return [[t, c] for t, c in items]


def side(lines, tokenize, unknown=lambda toks: 0):
    hist = [0] * 66
    counts = Counter()
    lengths = []
    unk_total = 0
    unk_lines = 0
    for line in lines:
        toks = tokenize(line)
        lengths.append(len(toks))
        hist[bucket(len(toks))] += 1
        counts.update(toks)
        u = unknown(toks)
        unk_total += u
        unk_lines += 1 if u else 0
    n = len(lines)
    return {"sentence_count": n, "token_count": sum(lengths), "min_length": min(lengths),
            "max_length": max(lengths), "mean_length": sum(lengths) / n, "histogram": hist,
            "frequencies": freq_table(counts), "unknowns_per_sentence": unk_total / n,
            "unknown_sentence_fraction": unk_lines / n}


def whitespace(line):
    return line.split()


# Word-level vocabulary of 4 specials + 20 words: the 20 most frequent
# space-terminated words of the source training side, ties by byte order.
word_counts = Counter(w for line in corpus["train"]["src"] for w in line.split())
kept = [w for w, _ in sorted(word_counts.items(), key=lambda kv: (-kv[1], kv[0].encode("utf-8")))[:20]]


def words(line):
    return [w + "▁" if w in kept else "<unk>" for w in line.split()]


expected = {"whitespace": {}, "words24_src": {}}
combined = Counter()
for split in splits:
    expected["whitespace"][split] = {s: side(corpus[split][s], whitespace) for s in ("src", "trg")}
    expected["words24_src"][split] = side(corpus[split]["src"], words,
                                          lambda toks: sum(t == "<unk>" for t in toks))
for s in ("src", "trg"):
    for line in corpus["train"][s]:
        combined.update(line.split())
expected["whitespace_train_frequencies"] = freq_table(combined)

with open("expected.json", "w", encoding="utf-8") as f:
    json.dump(expected, f, ensure_ascii=False, indent=1)
