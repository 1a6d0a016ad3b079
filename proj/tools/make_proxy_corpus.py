#!/usr/bin/env python3
"""Generate a tweet-like JSONL corpus for en/fr/es/de/vi from wordfreq lists.

Each line looks like a tweet record: {"id", "text", "lang", "user": {"lang"}}.
Texts are 3-15 words drawn by corpus frequency, with occasional URLs, @mentions
and #hashtags. A fraction of records carry a declared language that disagrees
with the detected one, so the agreement filter has something to drop.
"""

import argparse
import json
import random
import string
import sys

from wordfreq import top_n_list, word_frequency

LANGS = ["en", "fr", "es", "de", "vi"]
REGION = {"en": ["en-GB", "en-US"], "fr": ["fr-FR"], "es": ["es-MX", "es-ES"], "de": ["de-AT"], "vi": ["vi-VN"]}


def word_table(lang, size):
    words = [w for w in top_n_list(lang, size) if any(c.isalpha() for c in w)]
    weights = [word_frequency(w, lang) for w in words]
    return words, weights


def handle(rng):
    n = rng.randint(4, 12)
    return "".join(rng.choice(string.ascii_lowercase + string.digits + "_") for _ in range(n))


def url(rng):
    n = rng.randint(8, 12)
    token = "".join(rng.choice(string.ascii_letters + string.digits) for _ in range(n))
    return rng.choice(["https://t.co/", "http://bit.ly/", "https://www.example.com/"]) + token


def sentence(rng, words, weights):
    n = rng.randint(3, 15)
    toks = rng.choices(words, weights=weights, k=n)
    if rng.random() < 0.6:
        toks[0] = toks[0][:1].upper() + toks[0][1:]
    text = " ".join(toks)
    r = rng.random()
    if r < 0.4:
        text += "."
    elif r < 0.5:
        text += "!"
    elif r < 0.55:
        text += "?"
    if rng.random() < 0.12:
        text = "@" + handle(rng) + " " + text
    if rng.random() < 0.10:
        text += " #" + rng.choice(words[:2000]).replace(" ", "")
    if rng.random() < 0.15:
        text += " " + url(rng)
    return text


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", required=True)
    ap.add_argument("--per-lang", type=int, default=16000)
    ap.add_argument("--vocab", type=int, default=30000, help="most frequent words kept per language")
    ap.add_argument("--disagree", type=float, default=0.08, help="fraction with a mismatched declared language")
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    tables = {lang: word_table(lang, args.vocab) for lang in LANGS}
    records = []
    for lang in LANGS:
        words, weights = tables[lang]
        for _ in range(args.per_lang):
            declared = lang
            if rng.random() < args.disagree:
                declared = rng.choice([l for l in LANGS if l != lang])
            elif rng.random() < 0.2:
                declared = rng.choice(REGION[lang])
            records.append((sentence(rng, words, weights), lang, declared))
    rng.shuffle(records)

    with open(args.out, "w", encoding="utf-8") as f:
        for i, (text, lang, declared) in enumerate(records):
            rec = {"id": str(100000 + i), "text": text, "lang": lang, "user": {"id": str(rng.randint(1, 10**9)), "lang": declared}}
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")
    print(f"wrote {len(records)} records to {args.out}", file=sys.stderr)


if __name__ == "__main__":
    main()
