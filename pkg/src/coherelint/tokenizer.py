"""Order-preserving tokenization of comments and code.

Word order is what the downstream recurrent models key on, so tokens come out
exactly in left-to-right occurrence order, comment first, then code.
"""

import re
from dataclasses import dataclass

PUNCT = set("(){}[];,.+-*/=<>!&|%^~?:@#\"'")
TWO_CHAR_OPS = ("==", "!=", "<=", ">=", "&&", "||", "++", "--", "->")
# Stripped only at line starts; order matters ("*/" before "*").
COMMENT_MARKERS = ("//", "/*", "*/", "*")

_CAMEL_BOUNDARY = re.compile(r"(?<=[a-z0-9])(?=[A-Z])")


class EmptyCorpus(ValueError):
    pass


@dataclass
class TokenSequence:
    tokens: list
    source_id: str


def _split_identifier(word):
    parts = []
    for chunk in word.split("_"):
        if chunk:
            parts.extend(_CAMEL_BOUNDARY.sub(" ", chunk).split())
    return parts


def tokenize(text, split_identifiers=False):
    """Split text into word and punctuation tokens.

    Whitespace separates tokens; punctuation runs are emitted one character
    at a time except for two-character operators, which stay whole. Comment
    markers at line starts are dropped so comment prose tokenizes like text.
    """
    tokens = []
    for line in text.splitlines():
        s = line.lstrip()
        for marker in COMMENT_MARKERS:
            if s.startswith(marker):
                s = s[len(marker):]
                break
        i, n = 0, len(s)
        while i < n:
            c = s[i]
            if c.isspace():
                i += 1
            elif c in PUNCT:
                two = s[i:i + 2]
                if two in TWO_CHAR_OPS:
                    tokens.append(two)
                    i += 2
                else:
                    tokens.append(c)
                    i += 1
            else:
                j = i
                while j < n and not s[j].isspace() and s[j] not in PUNCT:
                    j += 1
                word = s[i:j]
                if split_identifiers:
                    tokens.extend(_split_identifier(word))
                else:
                    tokens.append(word)
                i = j
    return tokens


def pair_tokens(pair, split_identifiers=False):
    """Tokens of the comment followed by tokens of the code."""
    tokens = tokenize(pair.comment, split_identifiers)
    tokens += tokenize(pair.code, split_identifiers)
    return TokenSequence(tokens=tokens, source_id=pair.id)


def corpus_stats(pairs, split_identifiers=False, bucket_width=10):
    """Mean/max token counts per pair plus a fixed-width length histogram."""
    if not pairs:
        raise EmptyCorpus("corpus_stats needs at least one pair")
    lengths = [len(pair_tokens(p, split_identifiers).tokens) for p in pairs]
    histogram = {}
    for n in lengths:
        bucket = (n // bucket_width) * bucket_width
        histogram[bucket] = histogram.get(bucket, 0) + 1
    return {
        "mean_length": sum(lengths) / len(lengths),
        "max_length": max(lengths),
        "histogram": dict(sorted(histogram.items())),
    }


def format_corpus_stats(stats, bucket_width=10):
    lines = [
        f"pairs mean length : {stats['mean_length']:.2f}",
        f"pairs max length  : {stats['max_length']}",
        "length histogram:",
    ]
    for bucket, count in stats["histogram"].items():
        lines.append(f"  {bucket:>5}-{bucket + bucket_width - 1:<5} {count}")
    return "\n".join(lines)
