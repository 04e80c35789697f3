"""Byte-pair-encoding vocabularies for protein and SMILES strings.

Every full sequence is one BPE word. Training repeatedly merges the most
frequent adjacent symbol pair (overlapping occurrences counted, ties broken
by the lexicographically smallest pair) until the vocabulary is full or no
pair occurs at least twice.
"""

from bisect import bisect_right
from collections import Counter, defaultdict
from dataclasses import dataclass, field

PAD, BOS, EOS, UNK = 0, 1, 2, 3
SPECIALS = ("<pad>", "<s>", "</s>", "<unk>")

PROTEIN_VOCAB_SIZE = 10000
SMILES_VOCAB_SIZE = 8000

_MAGIC = "#bpe-v1"


class EmptyCorpus(ValueError):
    pass


class VocabTooSmall(ValueError):
    pass


class UnknownId(ValueError):
    pass


class VocabFormatError(ValueError):
    pass


@dataclass
class TokenVocab:
    merges: list  # ordered (left, right) pairs
    token_to_id: dict
    id_to_token: list = field(init=False, repr=False)
    merge_rank: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.id_to_token = [None] * len(self.token_to_id)
        for tok, i in self.token_to_id.items():
            self.id_to_token[i] = tok
        if any(t is None for t in self.id_to_token):
            raise VocabFormatError("token ids are not contiguous from 0")
        for i, name in enumerate(SPECIALS):
            if self.id_to_token[i] != name:
                raise VocabFormatError(f"special token {name} must have id {i}")
        # a pair can recur in the merge list when its symbols are rebuilt later
        self.merge_rank = defaultdict(list)
        for rank, pair in enumerate(self.merges):
            self.merge_rank[tuple(pair)].append(rank)
        self.merge_rank = dict(self.merge_rank)

    def __len__(self):
        return len(self.token_to_id)

    def __eq__(self, other):
        return (
            isinstance(other, TokenVocab)
            and [tuple(m) for m in self.merges] == [tuple(m) for m in other.merges]
            and self.token_to_id == other.token_to_id
        )

    def specials(self):
        return {"pad": PAD, "bos": BOS, "eos": EOS, "unk": UNK}

    # -- encode / decode ---------------------------------------------------

    def tokenize(self, s):
        """Apply merges in training order to the character sequence of ``s``."""
        symbols = list(s)
        last = -1
        ranks = self.merge_rank
        while len(symbols) > 1:
            best = None
            for k in range(len(symbols) - 1):
                rs = ranks.get((symbols[k], symbols[k + 1]))
                if rs is None:
                    continue
                pos = bisect_right(rs, last)
                if pos < len(rs) and (best is None or rs[pos] < best):
                    best = rs[pos]
            if best is None:
                break
            left, right = self.merges[best]
            merged = []
            k = 0
            while k < len(symbols):
                if k + 1 < len(symbols) and symbols[k] == left and symbols[k + 1] == right:
                    merged.append(left + right)
                    k += 2
                else:
                    merged.append(symbols[k])
                    k += 1
            symbols = merged
            last = best
        return symbols

    def encode(self, s, frame=False):
        ids = [self.token_to_id.get(tok, UNK) for tok in self.tokenize(s)]
        if frame:
            ids = [BOS] + ids + [EOS]
        return ids

    def decode(self, ids):
        out = []
        for i in ids:
            i = int(i)
            if not 0 <= i < len(self.id_to_token):
                raise UnknownId(f"token id {i} not in vocabulary of size {len(self)}")
            if i < len(SPECIALS):
                continue
            out.append(self.id_to_token[i])
        return "".join(out)

    # -- persistence -----------------------------------------------------------

    def dumps(self):
        lines = [_MAGIC]
        lines.extend(f"{l}\t{r}" for l, r in self.merges)
        lines.append("#tokens")
        lines.extend(f"{tok}\t{i}" for i, tok in enumerate(self.id_to_token))
        return "\n".join(lines) + "\n"

    def save(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.dumps())

    @classmethod
    def loads(cls, text):
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if not lines or lines[0] != _MAGIC:
            raise VocabFormatError("missing #bpe-v1 header")
        try:
            split = lines.index("#tokens")
        except ValueError:
            raise VocabFormatError("missing #tokens section") from None
        merges = []
        for line in lines[1:split]:
            left, sep, right = line.partition("\t")
            if not sep:
                raise VocabFormatError(f"bad merge line {line!r}")
            merges.append((left, right))
        token_to_id = {}
        for line in lines[split + 1 :]:
            tok, sep, num = line.rpartition("\t")
            if not sep:
                raise VocabFormatError(f"bad token line {line!r}")
            token_to_id[tok] = int(num)
        return cls(merges, token_to_id)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())


def _pair_counts(word):
    c = Counter()
    for k in range(len(word) - 1):
        c[(word[k], word[k + 1])] += 1
    return c


def train_bpe(corpus, vocab_size):
    """Learn a BPE vocabulary with at most ``vocab_size`` non-special tokens.

    The four specials take ids 0-3 on top of ``vocab_size``.
    """
    corpus = [s for s in corpus if s]
    if not corpus:
        raise EmptyCorpus("BPE corpus is empty")
    freq = Counter(corpus)
    chars = sorted({ch for s in freq for ch in s})
    if vocab_size < len(chars):
        raise VocabTooSmall(
            f"vocab_size {vocab_size} cannot hold the {len(chars)} base characters"
        )
    tokens = list(SPECIALS) + chars
    known = set(tokens)
    words = [list(s) for s in freq]
    counts = [freq[s] for s in freq]
    pair_freq = Counter()
    where = defaultdict(set)  # pair -> word indices containing it
    for w, word in enumerate(words):
        for pair, c in _pair_counts(word).items():
            pair_freq[pair] += c * counts[w]
            where[pair].add(w)
    merges = []
    limit = vocab_size + len(SPECIALS)
    while len(tokens) < limit and pair_freq:
        top = max(pair_freq.values())
        if top < 2:
            break
        pair = min(p for p, c in pair_freq.items() if c == top)
        left, right = pair
        merged_tok = left + right
        merges.append(pair)
        if merged_tok not in known:
            known.add(merged_tok)
            tokens.append(merged_tok)
        for w in sorted(where.pop(pair, ())):
            word = words[w]
            before = _pair_counts(word)
            out = []
            k = 0
            while k < len(word):
                if k + 1 < len(word) and word[k] == left and word[k + 1] == right:
                    out.append(merged_tok)
                    k += 2
                else:
                    out.append(word[k])
                    k += 1
            words[w] = out
            after = _pair_counts(out)
            for p, c in before.items():
                pair_freq[p] -= c * counts[w]
                if pair_freq[p] <= 0:
                    del pair_freq[p]
                if p not in after:
                    where[p].discard(w)
            for p, c in after.items():
                pair_freq[p] += c * counts[w]
                where[p].add(w)
        pair_freq.pop(pair, None)
    return TokenVocab(merges, {tok: i for i, tok in enumerate(tokens)})
