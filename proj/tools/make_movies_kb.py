#!/usr/bin/env python3
# Copyright 2026 The nspm Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes the synthetic movie knowledge base used by the default pipeline.

Names are pseudo-words so nothing depends on real DBpedia content. Output is
a pure function of --seed.
"""

import argparse
import random

DBR = "http://dbpedia.org/resource/"
DBO = "http://dbpedia.org/ontology/"
RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
LABEL = "http://www.w3.org/2000/01/rdf-schema#label"
XSD = "http://www.w3.org/2001/XMLSchema#"

ONSETS = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z",
          "br", "dr", "gr", "kr", "st", "th", "sh", "ch"]
VOWELS = ["a", "e", "i", "o", "u", "ai", "ea", "ou"]
CODAS = ["", "", "n", "r", "l", "s", "th", "nd", "x", "m"]


def word(rng, syllables):
    w = "".join(rng.choice(ONSETS) + rng.choice(VOWELS) for _ in range(syllables))
    return (w + rng.choice(CODAS)).capitalize()


def unique_words(rng, n, syllables):
    seen = set()
    out = []
    while len(out) < n:
        w = word(rng, syllables)
        if w not in seen:
            seen.add(w)
            out.append(w)
    return out


def lit(text, lang="en"):
    esc = text.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{esc}"@{lang}' if lang else f'"{esc}"'


def typed(value, dtype):
    return f'"{value}"^^<{XSD}{dtype}>'


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--films", type=int, default=320)
    ap.add_argument("--people", type=int, default=260)
    ap.add_argument("--out", default="data/movies.nt")
    args = ap.parse_args()
    rng = random.Random(args.seed)

    firsts = unique_words(rng, 60, 2)
    lasts = unique_words(rng, 90, 2)
    people = []
    seen = set()
    while len(people) < args.people:
        name = f"{rng.choice(firsts)} {rng.choice(lasts)}"
        if name not in seen:
            seen.add(name)
            people.append(name)

    person_names = set(people)
    title_words = unique_words(rng, 420, 3)
    films = []
    seen = set()
    while len(films) < args.films:
        n = rng.choice([1, 1, 1, 2, 2, 3])
        words = [rng.choice(title_words) for _ in range(n)]
        if n > 1 and rng.random() < 0.3:
            words = ["The"] + words[1:]
        title = " ".join(words)
        if title not in seen and title not in person_names:
            seen.add(title)
            films.append(title)
    # A handful of films share their title with a person; DBpedia disambiguates
    # the film URI with a "(film)" suffix.
    for i in range(6):
        films[-1 - i] = people[10 * i + 3]

    cities = unique_words(rng, 30, 2)
    countries = unique_words(rng, 8, 3)
    languages = unique_words(rng, 6, 2)

    def res(label, suffix=""):
        return "<" + DBR + label.replace(" ", "_") + suffix + ">"

    film_uri = {}
    for f in films:
        film_uri[f] = res(f, "_(film)" if f in person_names else "")

    lines = []

    def add(s, p, o):
        lines.append(f"{s} <{p}> {o} .")

    # Skewed popularity so that degree ranking has a long tail.
    weights = [1.0 / (i + 1) ** 0.8 for i in range(len(people))]
    order = list(range(len(people)))
    rng.shuffle(order)

    def pick(k):
        chosen = set()
        while len(chosen) < k:
            chosen.add(order[rng.choices(range(len(people)), weights)[0]])
        return [people[i] for i in sorted(chosen)]

    for c in cities:
        add(res(c), RDF_TYPE, f"<{DBO}City>")
        add(res(c), LABEL, lit(c))
    for c in countries:
        add(res(c), RDF_TYPE, f"<{DBO}Country>")
        add(res(c), LABEL, lit(c))
    for lang in languages:
        add(res(lang + " language"), RDF_TYPE, f"<{DBO}Language>")
        add(res(lang + " language"), LABEL, lit(lang + " language"))

    for p in people:
        u = res(p)
        add(u, RDF_TYPE, f"<{DBO}Person>")
        add(u, LABEL, lit(p))
        if rng.random() < 0.2:
            add(u, LABEL, lit(p, "de"))
        add(u, f"{DBO}birthPlace", res(rng.choice(cities)))
        year = rng.randint(1930, 1995)
        add(u, f"{DBO}birthDate", typed(f"{year}-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}", "date"))

    for f in films:
        u = film_uri[f]
        add(u, RDF_TYPE, f"<{DBO}Film>")
        add(u, LABEL, lit(f))
        add(u, f"{DBO}director", res(pick(1)[0]))
        for a in pick(rng.randint(2, 5)):
            add(u, f"{DBO}starring", res(a))
        if rng.random() < 0.7:
            add(u, f"{DBO}writer", res(pick(1)[0]))
        if rng.random() < 0.5:
            add(u, f"{DBO}producer", res(pick(1)[0]))
        if rng.random() < 0.4:
            add(u, f"{DBO}musicComposer", res(pick(1)[0]))
        add(u, f"{DBO}runtime", typed(rng.randint(80, 170), "integer"))
        add(u, f"{DBO}releaseDate", typed(f"{rng.randint(1960, 2019)}-01-01", "date"))
        add(u, f"{DBO}country", res(rng.choice(countries)))
        add(u, f"{DBO}language", res(rng.choice(languages) + " language"))

    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("# Synthetic movie subset; regenerate with tools/make_movies_kb.py\n")
        fh.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
