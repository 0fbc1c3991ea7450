"""Independent reference implementations used as test oracles.

They are written directly from the textbook definitions, with no code
shared with the package.
"""

import itertools
import math
from fractions import Fraction


def _grams(seq, n):
    out = {}
    for i in range(len(seq) - n + 1):
        g = " ".join(seq[i:i + n])
        out[g] = out.get(g, 0) + 1
    return out


def bleu_oracle(hyps, refs, max_n=4):
    """Corpus BLEU: clipped n-gram counts summed over the corpus, geometric
    mean over the orders the hypotheses can contain, brevity penalty."""
    num = [0] * max_n
    den = [0] * max_n
    c = r = 0
    for h, ref in zip(hyps, refs):
        c += len(h)
        r += len(ref)
        for n in range(1, max_n + 1):
            hg, rg = _grams(h, n), _grams(ref, n)
            for g, k in hg.items():
                num[n - 1] += min(k, rg.get(g, 0))
            den[n - 1] += sum(hg.values())
    if c == 0:
        return 0.0
    orders = [n for n in range(max_n) if den[n] > 0]
    if any(num[n] == 0 for n in orders):
        return 0.0
    logp = sum(math.log(num[n]) - math.log(den[n]) for n in orders) / len(orders)
    bp = math.exp(min(0.0, 1 - r / c))
    return 100 * bp * math.exp(logp)


def nngen_oracle(train_diffs, train_msgs, query, k=5):
    """Naive two-stage scan: exact cosine ranking (squared, as fractions),
    ties to the lower id; then BLEU re-rank, ties to higher cosine / lower id."""
    qtf = {}
    for t in query:
        qtf[t] = qtf.get(t, 0) + 1
    vocab = set()
    for d in train_diffs:
        vocab.update(d)
    qtf = {t: v for t, v in qtf.items() if t in vocab}
    if not qtf:
        return train_msgs[0], 0
    scored = []
    for i, d in enumerate(train_diffs):
        tf = {}
        for t in d:
            tf[t] = tf.get(t, 0) + 1
        dot = sum(v * tf.get(t, 0) for t, v in qtf.items())
        n2 = sum(v * v for v in tf.values())
        cos2 = Fraction(dot * dot, n2) if n2 else Fraction(0)
        scored.append((cos2 if dot >= 0 else -cos2, i))
    if all(s == 0 for s, _ in scored):
        return train_msgs[0], 0
    ranked = sorted(scored, key=lambda s: (-s[0], s[1]))[:k]
    best = None
    for rank, (_, i) in enumerate(ranked):
        key = (bleu_oracle([train_diffs[i]], [list(query)]), -rank)
        if best is None or key > best[0]:
            best = (key, i)
    return train_msgs[best[1]], best[1]


def exhaustive_decode(step_table, vocab_size, max_len, eos, length_penalty=0.0, forbidden=()):
    """Best output over every sequence of at most ``max_len`` tokens.

    ``step_table(prefix)`` gives log-probabilities after ``prefix``.
    Finished outputs end in EOS (not counted in the tokens, counted in the
    length); outputs of exactly ``max_len`` tokens may also stop unfinished.
    """
    best = None
    for length in range(0, max_len + 1):
        for seq in itertools.product([v for v in range(vocab_size) if v != eos and v not in forbidden], repeat=length):
            lp = 0.0
            for i, tok in enumerate(seq):
                lp += step_table(seq[:i])[tok]
            options = []
            end_lp = step_table(seq)[eos] if length < max_len else None
            if end_lp is not None:
                options.append((lp + end_lp, length + 1))
            if length == max_len:
                options.append((lp, length))
            for total, n in options:
                if not math.isfinite(total):
                    continue
                score = total / (max(n, 1) ** length_penalty) if length_penalty else total
                key = (score, -len(seq), tuple(-t for t in seq))
                if best is None or key > best[0]:
                    best = (key, seq, total)
    return list(best[1]), best[2]
