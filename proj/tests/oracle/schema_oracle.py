#!/usr/bin/env python3
"""Cross-checks generated schemas against the jsonschema package.

For random struct graphs, every schema must be a valid draft 2020-12 schema,
and our validator must accept exactly the documents jsonschema accepts.
"""
import json
import random
import subprocess
import sys

import jsonschema

DUMP = sys.argv[1]
PRIMS = ["Num", "Str", "Bool", "List", "Map"]


def sample(rng, t, structs, good=True):
    if t in structs:
        return make_doc(rng, t, structs)
    if not good:
        t = rng.choice([p for p in PRIMS if p != t])
    return {
        "Num": lambda: rng.choice([rng.randint(-5, 5), rng.random() * 100, 0, -0.5]),
        "Str": lambda: rng.choice(["", "high", "0", "true"]),
        "Bool": lambda: rng.choice([True, False]),
        "List": lambda: rng.choice([[], [1, "a"], [[None]]]),
        "Map": lambda: rng.choice([{}, {"k": 1}, {"n": {"m": []}}]),
    }[t]()


def make_doc(rng, name, structs):
    return {f: sample(rng, t, structs) for f, t in structs[name]}


def mutate(rng, doc, name, structs):
    """Randomly breaks (or harmlessly extends) a conforming document."""
    fields = structs[name]
    choice = rng.randrange(6)
    if choice == 0 or not fields:
        return rng.choice([[], "x", 3, None, True])
    f, t = rng.choice(fields)
    doc = dict(doc)
    if choice == 1:
        del doc[f]
    elif choice == 2:
        doc[f] = None
    elif choice == 3:
        doc["extra_" + str(rng.randrange(9))] = rng.choice([1, "x", [], None])
    elif choice == 4 and t in structs:
        doc[f] = mutate(rng, doc[f], t, structs)
    else:
        doc[f] = sample(rng, t, structs, good=False) if t not in structs else rng.choice([1, "s", []])
    return doc


def random_structs(rng):
    structs = {}
    n = rng.randint(1, 4)
    names = ["S%d" % i for i in range(n)]
    for i, name in enumerate(names):
        fields = []
        for j in range(rng.randint(0, 5)):
            # references only point to later structs, so there are no cycles
            pool = PRIMS + names[i + 1:]
            fields.append(("f%d" % j, rng.choice(pool)))
        structs[name] = fields
    return structs


def run_case(structs, target, docs):
    payload = {
        "structs": [{"name": n, "fields": [list(f) for f in fs]} for n, fs in structs.items()],
        "target": target,
        "docs": docs,
    }
    out = subprocess.run([DUMP], input=json.dumps(payload), capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main():
    rng = random.Random(20261016)
    checked = 0
    for case in range(150):
        structs = random_structs(rng)
        target = "S0"
        docs = []
        for _ in range(12):
            d = make_doc(rng, target, structs)
            docs.append(d if rng.random() < 0.4 else mutate(rng, d, target, structs))
        res = run_case(structs, target, docs)
        schema = res["schema"]
        jsonschema.Draft202012Validator.check_schema(schema)
        validator = jsonschema.Draft202012Validator(schema)
        for doc, ours in zip(docs, res["accepts"]):
            theirs = validator.is_valid(doc)
            if theirs != ours:
                print("MISMATCH case %d: ours=%s jsonschema=%s\nschema=%s\ndoc=%s"
                      % (case, ours, theirs, json.dumps(schema), json.dumps(doc)))
                return 1
            checked += 1

    # fixed cases
    structs = {"Verdict": [("score", "Num"), ("label", "Str")]}
    res = run_case(structs, "Verdict", [{"score": "high", "label": "x"}, {"score": 1, "label": "x"}, {"score": True, "label": "x"}])
    if res["accepts"] != [False, True, False]:
        print("fixed cases wrong:", res["accepts"])
        return 1
    cyc = run_case({"A": [("b", "B")], "B": [("a", "A")]}, "A", [])
    if cyc.get("error") != "SchemaCycleError":
        print("cycle not rejected:", cyc)
        return 1
    print("schema oracle: %d documents agree with jsonschema" % checked)
    return 0


if __name__ == "__main__":
    sys.exit(main())
