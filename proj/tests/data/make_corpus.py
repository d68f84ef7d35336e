"""Regenerates corpus500.txt: 500 Dutch-like sentences, some with one
gendered word (swappable), some with none, two, or an excluded pronoun.

    python3 make_corpus.py
"""
import os
import random

rng = random.Random(42)
male = ["man", "jongen", "vader", "zoon", "broer", "koning", "oom", "heer"]
female = ["vrouw", "meisje", "moeder", "dochter", "zus", "koningin", "tante", "dame"]
neutral_subjects = ["de hond", "het kind", "de leraar", "de buurman", "een student", "de arts", "het team"]
verbs = ["loopt", "leest", "werkt", "zingt", "kookt", "fietst", "schrijft", "wacht"]
tails = ["in de stad", "op het plein", "naar huis", "met plezier", "bij het café", "voor één uur", "in de tuin",
         "zonder haast", "tijdens de les"]
ends = [".", ".", ".", "!", "?"]


def cap(s):
    return s[0].upper() + s[1:]


def gendered():
    return rng.choice(male + female)


def sentence(kind):
    v, t, e = rng.choice(verbs), rng.choice(tails), rng.choice(ends)
    if kind == "one":
        g = gendered()
        form = rng.randrange(5)
        if form == 0:
            return "De %s %s %s%s" % (g, v, t, e)
        if form == 1:
            return "%s %s %s%s" % (cap(g), v, t, e)
        if form == 2:
            return "Gisteren %s de %s, %s%s" % (v, g, t, e)
        if form == 3:
            return "\"%s\" %s %s%s" % (cap(g), v, t, e)
        return "Volgens de %s: men %s %s%s" % (g, v, t, e)
    if kind == "none":
        return "%s %s %s%s" % (cap(rng.choice(neutral_subjects)), v, t, e)
    if kind == "two":
        return "De %s en de %s %s %s%s" % (gendered(), gendered(), v, t, e)
    if kind == "excluded":
        return "%s %s met de %s%s" % (rng.choice(["Zij", "Ze"]), v, gendered(), e)
    if kind == "compound":
        # Gendered word only as part of a longer word: not a match.
        return "De %sachtige %s %s%s" % (rng.choice(male), rng.choice(verbs), t, e)
    raise ValueError(kind)


kinds = ["one"] * 45 + ["none"] * 25 + ["two"] * 12 + ["excluded"] * 10 + ["compound"] * 8
sentences = [sentence(rng.choice(kinds)) for _ in range(499)]
# One sentence over the 512-token limit, with a single gendered word.
sentences.insert(250, "De man " + " ".join(["zeer"] * 520) + " moe.")

lines, i = [], 0
while i < len(sentences):
    n = rng.choice([1, 1, 1, 2, 3])
    lines.append(("  " if rng.random() < 0.1 else " ").join(sentences[i:i + n]))
    i += n
with open(os.path.join(os.path.dirname(os.path.abspath(__file__)), "corpus500.txt"), "w", encoding="utf-8",
          newline="\n") as f:
    f.write("\n".join(lines) + "\n")
