#!/usr/bin/env python3
"""Convert a Princeton WordNet database directory (data.noun, data.verb, ...)
and, optionally, an Open Multilingual Wordnet tab file into the three TSV
files read by `lexsim import-kb`:

    synsets.tsv    <synset_id>\t<pos>
    relations.tsv  <source_id>\t<relation_kind>\t<target_id>
    lexicon.tsv    <lemma>\t<synset_id>

Synset ids are "<offset>-<pos>", which is also the OMW convention, so an
OMW tab file (e.g. wn-data-spa.tab) can replace the English lexicon while
keeping the English relation structure.

Usage:
    wordnet_to_tsv.py DICT_DIR OUT_DIR [--omw FILE] [--around ID ...]
                      [--lemma WORD ...] [--domains {skip,other_semantic}]

--around restricts the output to the given synsets, all their first-degree
relation targets, the synsets of every --lemma, and the hypernym closure of
all of these. It is used to cut small test fixtures out of a full wordnet.
"""

import argparse
import os
import sys
from collections import defaultdict

POS_FILES = {"n": "data.noun", "v": "data.verb", "a": "data.adj", "r": "data.adv"}

SEMANTIC = {
    "@": "hypernym",
    "@i": "hypernym",
    "~": "hyponym",
    "~i": "hyponym",
    "%m": "member_meronym",
    "%p": "part_meronym",
    "%s": "substance_meronym",
    "#m": "member_holonym",
    "#p": "part_holonym",
    "#s": "substance_holonym",
    "!": "antonym",
}
DOMAIN = {";c", "-c", ";r", "-r", ";u", "-u"}
ALWAYS_LEXICAL = {"+", "\\", "<"}


def relation_kind(symbol, source_target, domains):
    if symbol in DOMAIN:
        return None if domains == "skip" else "other_semantic"
    if symbol in SEMANTIC:
        return SEMANTIC[symbol]
    if symbol in ALWAYS_LEXICAL or source_target != "0000":
        return "lexical"
    return "other_semantic"


def clean_lemma(word, pos):
    if pos == "a" and word.endswith(")"):
        word = word[: word.rindex("(")]
    return word.lower()


def parse_dict(dict_dir, domains):
    synsets = {}
    relations = []
    lexicon = []
    for pos, name in POS_FILES.items():
        path = os.path.join(dict_dir, name)
        if not os.path.exists(path):
            continue
        with open(path, encoding="utf-8", errors="replace") as fh:
            for line in fh:
                if line.startswith("  "):
                    continue
                fields = line.split(" | ", 1)[0].split()
                offset, _lexfile, ss_type = fields[0], fields[1], fields[2]
                sid = "%s-%s" % (offset, "a" if ss_type == "s" else ss_type)
                synsets[sid] = sid[-1]
                w_cnt = int(fields[3], 16)
                i = 4
                for _ in range(w_cnt):
                    lexicon.append((clean_lemma(fields[i], pos), sid))
                    i += 2
                p_cnt = int(fields[i])
                i += 1
                for _ in range(p_cnt):
                    symbol, target, tpos, st = fields[i : i + 4]
                    i += 4
                    kind = relation_kind(symbol, st, domains)
                    if kind is None:
                        continue
                    tid = "%s-%s" % (target, "a" if tpos == "s" else tpos)
                    relations.append((sid, kind, tid))
    return synsets, relations, lexicon


def parse_omw(path):
    lexicon = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) < 3 or not parts[1].endswith(":lemma"):
                continue
            sid = parts[0]
            if sid.endswith("-s"):
                sid = sid[:-1] + "a"
            lexicon.append((parts[2].strip().lower(), sid))
    return lexicon


def restrict(synsets, relations, lexicon, around, lemmas):
    out = defaultdict(list)
    for src, kind, tgt in relations:
        out[src].append((kind, tgt))
    keep = set(around)
    for sid in around:
        keep.update(t for _, t in out[sid])
    wanted = set(lemmas)
    keep.update(sid for lemma, sid in lexicon if lemma in wanted)
    stack = list(keep)
    while stack:
        sid = stack.pop()
        for kind, tgt in out[sid]:
            if kind == "hypernym" and tgt not in keep:
                keep.add(tgt)
                stack.append(tgt)
    synsets = {k: v for k, v in synsets.items() if k in keep}
    relations = [r for r in relations if r[0] in keep and r[2] in keep]
    lexicon = [e for e in lexicon if e[1] in keep]
    return synsets, relations, lexicon


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("dict_dir")
    ap.add_argument("out_dir")
    ap.add_argument("--omw", help="OMW tab file providing the lexicon")
    ap.add_argument("--around", nargs="*", default=[])
    ap.add_argument("--lemma", nargs="*", default=[])
    ap.add_argument("--domains", choices=["skip", "other_semantic"], default="skip")
    args = ap.parse_args()

    synsets, relations, lexicon = parse_dict(args.dict_dir, args.domains)
    if args.omw:
        lexicon = [e for e in parse_omw(args.omw) if e[1] in synsets]
    if args.around or args.lemma:
        synsets, relations, lexicon = restrict(
            synsets, relations, lexicon, args.around, args.lemma
        )
    seen = set()
    lexicon = [e for e in lexicon if not (e in seen or seen.add(e))]

    os.makedirs(args.out_dir, exist_ok=True)
    with open(os.path.join(args.out_dir, "synsets.tsv"), "w", encoding="utf-8") as fh:
        for sid in sorted(synsets):
            fh.write("%s\t%s\n" % (sid, synsets[sid]))
    with open(os.path.join(args.out_dir, "relations.tsv"), "w", encoding="utf-8") as fh:
        for rel in sorted(relations):
            fh.write("%s\t%s\t%s\n" % rel)
    with open(os.path.join(args.out_dir, "lexicon.tsv"), "w", encoding="utf-8") as fh:
        for lemma, sid in lexicon:
            fh.write("%s\t%s\n" % (lemma, sid))

    print(
        "synsets=%d relations=%d lexicon_entries=%d lemmas=%d"
        % (len(synsets), len(relations), len(lexicon), len({l for l, _ in lexicon})),
        file=sys.stderr,
    )


if __name__ == "__main__":
    main()
