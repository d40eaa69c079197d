#!/usr/bin/env python3
"""Generate the bundled toy knowledge graph.

People are born in cities, cities lie in countries, nationality follows the
birth city's country and the spoken language follows the nationality.
"""
import argparse
import pathlib
import random


def build(seed):
    rng = random.Random(seed)
    countries = ["france", "spain", "italy"]
    language = {"france": "french", "spain": "spanish", "italy": "italian"}
    cities = {c: [f"{c}_city{i}" for i in range(3)] for c in countries}
    facts = []
    for c in countries:
        for city in cities[c]:
            facts.append((city, "cityIn", c))
    for i in range(150):
        person = f"person{i}"
        country = rng.choice(countries)
        city = rng.choice(cities[country])
        facts.append((person, "bornIn", city))
        if rng.random() < 0.9:
            facts.append((person, "nationality", country))
        if rng.random() < 0.8:
            facts.append((person, "speaks", language[country]))
        friend = f"person{rng.randrange(150)}"
        if friend != person:
            facts.append((person, "knows", friend))
    return facts


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="data/toy")
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    rng = random.Random(args.seed + 1)
    facts = build(args.seed)
    structural = [f for f in facts if f[1] in ("cityIn", "bornIn")]
    rest = [f for f in facts if f[1] not in ("cityIn", "bornIn")]
    rng.shuffle(rest)
    n_test = len(rest) // 5
    test, valid, train = rest[:n_test], rest[n_test:n_test + n_test // 2], rest[n_test + n_test // 2:]
    train = structural + train

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, part in (("train", train), ("valid", valid), ("test", test)):
        with open(out / f"{name}.tsv", "w") as fh:
            for s, p, o in part:
                fh.write(f"{s}\t{p}\t{o}\n")


if __name__ == "__main__":
    main()
