#!/usr/bin/env python3
"""Regenerates data/lemma_exceptions.tsv.

Takes the noun/verb lookup shipped with the `lemminflect` package and keeps
only the entries where the C++ suffix rules (built as `lemma_rules`) give a
different answer. Verb lemmas win over noun lemmas for the same surface form.
Every target is made a fixed point of the final lemmatizer.

usage: gen_lemma_exceptions.py <path-to-lemma_rules> > data/lemma_exceptions.tsv
"""
import csv
import gzip
import os
import re
import subprocess
import sys

import lemminflect

WORD = re.compile(r"^[a-z]{2,}$")
POS_RANK = {"VERB": 0, "NOUN": 1}


def load_lookup():
    path = os.path.join(os.path.dirname(lemminflect.__file__), "resources", "lemma_lu.csv.gz")
    best = {}
    with gzip.open(path, "rt") as fh:
        for row in csv.reader(fh):
            if len(row) < 3:
                continue
            form, pos, lemmas = row[0], row[1].upper(), row[2]
            if pos not in POS_RANK:
                continue
            lemma = lemmas.split("/")[0]
            if not WORD.match(form) or not WORD.match(lemma):
                continue
            rank = POS_RANK[pos]
            if form not in best or rank < best[form][0]:
                best[form] = (rank, lemma)
    return {form: lemma for form, (_, lemma) in best.items()}


def rule_lemmas(binary, words):
    out = subprocess.run([binary], input="\n".join(words) + "\n", capture_output=True, text=True, check=True)
    result = {}
    for line in out.stdout.splitlines():
        word, lemma = line.split("\t")
        result[word] = lemma
    return result


def main():
    binary = sys.argv[1]
    stopwords = set(open(os.path.join(os.path.dirname(__file__), "..", "data", "stopwords.txt")).read().split())
    lookup = {f: l for f, l in load_lookup().items() if f not in stopwords}
    words = sorted(set(lookup) | set(lookup.values()))
    rules = rule_lemmas(binary, words)

    table = {}
    for form, lemma in lookup.items():
        if rules[form] != lemma:
            table[form] = lemma
    # base forms the rules would mangle map to themselves
    for lemma in set(lookup.values()):
        if lemma not in table and rules[lemma] != lemma:
            table[lemma] = lemma
    # targets must be fixed points: collapse chains onto their end
    for _ in range(10):
        for form, lemma in list(table.items()):
            if lemma in table and table[lemma] != lemma:
                table[form] = table[lemma]
    for form, lemma in list(table.items()):
        if lemma in table and table[lemma] != lemma:
            del table[form]  # cycle

    print("# form\tlemma (suffix-rule exceptions derived from the lemminflect lookup, MIT)")
    for form in sorted(table):
        print(f"{form}\t{table[form]}")


if __name__ == "__main__":
    main()
