"""
Computable complexity backends and the (H1)-(H4) axiom harness.

``lz78_code_length`` is the reference backend: an incremental parse where
phrase j costs ceil(log2 j) bits for the dictionary index plus
ceil(log2 |A|) bits for the new symbol. A trailing phrase that ends inside
the dictionary costs its index only. The word length travels with the
container, so the code is uniquely decodable per length.
"""

import itertools
import logging
import math
import shlex
import subprocess
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from core.exceptions import EnumerationGuardError, ExtropyToolError, MembershipError, DomainError
from core.utils import ceil_log2
from tools.covering import QuantizerCovering, SymbolWord, build_covering, project_word, serialize_word

logger = logging.getLogger(__name__)

BACKEND_KINDS = ("lz78_code_length", "lz76_phrase_encoding", "external_compressor")
TWO_PART_C0 = 16
H4_ENUMERATION_GUARD = 2 ** 24

ADAPTERS = {
    "gzip": ["gzip", "-c", "-9", "-n"],
    "bzip2": ["bzip2", "-c", "-9"],
    "xz": ["xz", "-c", "-9", "--format=xz"],
}


@dataclass(frozen=True)
class ComplexityBackend:
    kind: str = "lz78_code_length"
    adapter: Optional[Union[str, Tuple[str, ...]]] = None

    def __post_init__(self):
        if self.kind not in BACKEND_KINDS:
            raise DomainError(f"unknown complexity backend {self.kind!r}")
        if self.kind == "external_compressor" and not self.adapter:
            raise DomainError("external_compressor needs an adapter")

    @property
    def informational(self) -> bool:
        return self.kind == "external_compressor"

    @property
    def name(self) -> str:
        if self.kind == "external_compressor":
            adapter = self.adapter if isinstance(self.adapter, str) else " ".join(self.adapter)
            return f"external_compressor({adapter})"
        return self.kind

    def argv(self) -> List[str]:
        if isinstance(self.adapter, str):
            return list(ADAPTERS.get(self.adapter, shlex.split(self.adapter)))
        return list(self.adapter)

    def __call__(self, word: SymbolWord) -> float:
        return complexity(word, self)


LZ78 = ComplexityBackend("lz78_code_length")


def backend_from_config(section) -> ComplexityBackend:
    return ComplexityBackend(kind=section.kind, adapter=section.adapter)


@dataclass(frozen=True)
class LZ78Parse:
    complete_phrases: int
    trailing: bool

    @property
    def phrase_count(self) -> int:
        return self.complete_phrases + int(self.trailing)


def lz78_parse(symbols: Sequence[int]) -> LZ78Parse:
    """Incremental (LZ78) parse; only the phrase structure is kept"""
    children: Dict[Tuple[int, int], int] = {}
    node = 0
    next_id = 1
    for s in symbols:
        key = (node, s)
        child = children.get(key)
        if child is None:
            children[key] = next_id
            next_id += 1
            node = 0
        else:
            node = child
    return LZ78Parse(complete_phrases=next_id - 1, trailing=node != 0)


def _index_bits(count: int) -> int:
    """sum of ceil(log2 j) for j = 1..count"""
    total = 0
    j = 1
    while j <= count:
        bits = ceil_log2(j)
        top = min(count, 1 << bits)
        total += bits * (top - j + 1)
        j = top + 1
    return total


def lz78_code_length(word: SymbolWord) -> int:
    parse = lz78_parse(word.symbols)
    p = parse.complete_phrases
    cost = _index_bits(p) + p * ceil_log2(word.alphabet_cardinality)
    if parse.trailing:
        cost += ceil_log2(p + 1)
    return cost


def lz76_phrase_count(symbols: Sequence[int]) -> int:
    """Kaspar-Schuster exhaustive-history phrase count"""
    s = list(symbols)
    n = len(s)
    if n == 0:
        return 0
    if n == 1:
        return 1
    c, l, i, k, k_max = 1, 1, 0, 1, 1
    while True:
        if s[i + k - 1] == s[l + k - 1]:
            k += 1
            if l + k > n:
                c += 1
                break
        else:
            k_max = max(k, k_max)
            i += 1
            if i == l:
                c += 1
                l += k_max
                if l + 1 > n:
                    break
                i, k, k_max = 0, 1, 1
            else:
                k = 1
    return c


def lz76_code_length(word: SymbolWord) -> int:
    n = len(word)
    if n == 0:
        return 0
    return lz76_phrase_count(word.symbols) * (ceil_log2(n) + ceil_log2(word.alphabet_cardinality) + 1)


def external_code_length(word: SymbolWord, backend: ComplexityBackend) -> int:
    """8 x compressed size of the serialized word; the adapter reads stdin and writes stdout"""
    if not len(word):
        return 0
    argv = backend.argv()
    try:
        result = subprocess.run(argv, input=serialize_word(word), stdout=subprocess.PIPE,
                                stderr=subprocess.PIPE, check=True)
    except FileNotFoundError:
        raise ExtropyToolError(f"compressor not found: {argv[0]}",
                               ["Install the compressor or pick the lz78_code_length backend"])
    except subprocess.CalledProcessError as e:
        raise ExtropyToolError(f"compressor {argv[0]} failed: {e.stderr.decode(errors='replace').strip()}")
    return 8 * len(result.stdout)


def complexity(word: SymbolWord, backend: ComplexityBackend = LZ78) -> float:
    """Code length of a word in bits (0 for the empty word)"""
    if not len(word):
        return 0
    if backend.kind == "lz78_code_length":
        return lz78_code_length(word)
    if backend.kind == "lz76_phrase_encoding":
        return lz76_code_length(word)
    return external_code_length(word, backend)


def two_part_code_complexity(word: SymbolWord, enumerated: Sequence[Any], index_n: int,
                             c0: int = TWO_PART_C0) -> int:
    """ceil(log2 card L_n) + ceil(log2 n) + c0 for a member of the enumerated list L_n"""
    if index_n < 1:
        raise DomainError("list index n must be positive")
    members = {tuple(m.symbols) if isinstance(m, SymbolWord) else tuple(m) for m in enumerated}
    if tuple(word.symbols) not in members:
        raise MembershipError(f"word of length {len(word)} is not in the enumerated list L_{index_n}")
    return ceil_log2(len(members)) + ceil_log2(index_n) + c0


@dataclass
class HypothesisReport:
    hypothesis: str
    slacks: Dict[str, float]
    passed: bool
    corpus: str
    backend: str = "lz78_code_length"
    informational: bool = False
    details: Dict[str, Any] = field(default_factory=dict)

    def to_row(self) -> Dict[str, Any]:
        row = {"hypothesis": self.hypothesis, "backend": self.backend, "corpus": self.corpus,
               "passed": self.passed, "informational": self.informational}
        row.update({f"slack_{k}": v for k, v in self.slacks.items()})
        return row


def _log2_len(n: int) -> float:
    return math.log2(n) if n > 0 else 0.0


def check_H1a(backend: ComplexityBackend, corpus: Iterable[Tuple[SymbolWord, SymbolWord]],
              const: float = 16.0, descriptor: str = "") -> HypothesisReport:
    """max over pairs (s = uv, u) of K(u) - K(s) - log2|u|"""
    pairs = list(corpus)
    if not pairs:
        raise DomainError("H1a corpus is empty")
    worst = -math.inf
    worst_length = 0
    per_length: Dict[int, float] = {}
    for s, u in pairs:
        slack = complexity(u, backend) - complexity(s, backend) - _log2_len(len(u))
        per_length[len(s)] = max(per_length.get(len(s), -math.inf), slack)
        if slack > worst:
            worst, worst_length = slack, len(s)
    return HypothesisReport(
        "H1a", {"c": worst}, worst <= const, descriptor or f"{len(pairs)} prefix pairs",
        backend.name, backend.informational,
        {"worst_length": worst_length, "bound": const, "per_length": per_length},
    )


def check_H1b(backend: ComplexityBackend, corpus: Iterable[Tuple[SymbolWord, SymbolWord]],
              alpha_max: float = 8.0, beta_max: float = 64.0, alpha_step: float = 0.25,
              beta_step: float = 0.5, descriptor: str = "") -> HypothesisReport:
    """Smallest grid alpha (then beta) with K(uv) <= K(u) + K(v) + h(|u|) + h(|v|).

    h(n) = alpha * log2(n + 1) + beta. For each alpha on the grid the
    needed beta is the worst excess over the corpus, rounded up to the beta
    grid. The first alpha whose beta fits under beta_max wins.
    """
    pairs = list(corpus)
    if not pairs:
        raise DomainError("H1b corpus is empty")
    excess = []
    log_terms = []
    for u, v in pairs:
        excess.append(complexity(u.concat(v), backend) - complexity(u, backend) - complexity(v, backend))
        log_terms.append(math.log2(len(u) + 1) + math.log2(len(v) + 1))
    excess = np.asarray(excess, dtype=float)
    log_terms = np.asarray(log_terms, dtype=float)

    alpha, beta = alpha_max, math.inf
    for a in np.arange(0.0, alpha_max + alpha_step / 2, alpha_step):
        needed = max(0.0, float(np.max(excess - a * log_terms)) / 2.0)
        b = math.ceil(needed / beta_step - 1e-9) * beta_step
        if b <= beta_max:
            alpha, beta = float(a), float(b)
            break
        if a + alpha_step > alpha_max + alpha_step / 2:
            alpha, beta = float(a), float(b)

    passed = alpha <= alpha_max and beta <= beta_max
    return HypothesisReport(
        "H1b", {"alpha": alpha, "beta": beta}, passed, descriptor or f"{len(pairs)} concatenation pairs",
        backend.name, backend.informational,
        {"max_excess": float(np.max(excess)), "alpha_max": alpha_max, "beta_max": beta_max},
    )


def h_function(alpha: float, beta: float):
    """h(n) = alpha * log2(n + 1) + beta"""
    def h(n: int) -> float:
        return alpha * math.log2(n + 1) + beta
    return h


@dataclass(frozen=True)
class ProductSample:
    """A word coded on the union covering plus the two factor coverings"""
    word: SymbolWord
    covering: QuantizerCovering
    left: QuantizerCovering
    right: QuantizerCovering


def check_H2(backend: ComplexityBackend, corpus: Iterable[ProductSample], const: float = 64.0,
             q: int = 1, descriptor: str = "") -> HypothesisReport:
    """Projection bounds for product-alphabet words.

    H2a: K(pi_i s) <= K(s) + const. H2b: K(s) <= K(pi_1 s) + K(pi_2 s) + |s| log2 q
    + p ceil(log2 |A|) + const, with p the LZ78 phrase count of s: the product
    alphabet is paid once per phrase of s. The raw H2b excess is reported as an
    effective multiplicity q_eff = 2^(excess / |s|), the q under which it would
    hold with no constant and no symbol allowance.
    """
    samples = list(corpus)
    if not samples:
        raise DomainError("H2 corpus is empty")
    worst_a = -math.inf
    worst_b = -math.inf
    worst_rate = 0.0
    for sample in samples:
        k_s = complexity(sample.word, backend)
        k_1 = complexity(project_word(sample.word, sample.covering, sample.left), backend)
        k_2 = complexity(project_word(sample.word, sample.covering, sample.right), backend)
        worst_a = max(worst_a, k_1 - k_s, k_2 - k_s)
        excess_b = k_s - k_1 - k_2 - len(sample.word) * math.log2(q)
        symbol_cost = lz78_parse(sample.word.symbols).phrase_count * ceil_log2(sample.word.alphabet_cardinality)
        worst_b = max(worst_b, excess_b - symbol_cost)
        if len(sample.word):
            worst_rate = max(worst_rate, excess_b / len(sample.word))

    effective_q = q * 2.0 ** max(0.0, worst_rate)
    h2a_pass = worst_a <= const
    h2b_pass = worst_b <= const
    return HypothesisReport(
        "H2", {"h2a": worst_a, "h2b": worst_b, "effective_q": effective_q}, h2a_pass and h2b_pass,
        descriptor or f"{len(samples)} product words", backend.name, backend.informational,
        {"h2a_passed": h2a_pass, "h2b_passed": h2b_pass, "bound": const, "q": q},
    )


def check_H3(backend: ComplexityBackend, lists: Iterable[Tuple[int, Sequence[SymbolWord]]],
             c0: int = TWO_PART_C0, descriptor: str = "") -> HypothesisReport:
    """Compare the backend with the two-part code on enumerated lists L_n.

    The two-part code meets the bound by construction; the backend's
    largest excess over it is reported for information.
    """
    worst = -math.inf
    checked = 0
    for index_n, members in lists:
        members = list(members)
        for word in members:
            bound = two_part_code_complexity(word, members, index_n, c0)
            worst = max(worst, complexity(word, backend) - bound)
            checked += 1
    if not checked:
        raise DomainError("H3 corpus is empty")
    return HypothesisReport(
        "H3", {"max_excess": worst}, True, descriptor or f"{checked} enumerated words",
        backend.name, True, {"c0": c0, "backend_within_bound": worst <= 0},
    )


def h4_enumeration_size(alphabet_cardinality: int, max_len: int) -> int:
    return sum(alphabet_cardinality ** length for length in range(1, max_len + 1))


def check_H4(backend: ComplexityBackend, alphabet_cardinality: int, max_len: int, c: float,
             guard: int = H4_ENUMERATION_GUARD) -> HypothesisReport:
    """Exhaustively count words of length 1..max_len with K(s) < c; pass iff count <= 2^c"""
    if alphabet_cardinality < 1 or max_len < 1:
        raise DomainError("alphabet cardinality and max_len must be positive")
    size = h4_enumeration_size(alphabet_cardinality, max_len)
    if size > guard:
        raise EnumerationGuardError(size, guard)

    count = 0
    per_length = {}
    for length in range(1, max_len + 1):
        below = 0
        for symbols in itertools.product(range(alphabet_cardinality), repeat=length):
            if complexity(SymbolWord(symbols, alphabet_cardinality), backend) < c:
                below += 1
        per_length[length] = below
        count += below
    logger.debug("H4 enumeration: %d of %d words below c=%s", count, size, c)
    bound = 2.0 ** c
    return HypothesisReport(
        "H4", {"count": float(count), "bound": bound}, count <= bound,
        f"all words over {alphabet_cardinality} symbols, length 1..{max_len}",
        backend.name, backend.informational, {"enumerated": size, "per_length": per_length, "c": c},
    )


# -- randomized corpora ----------------------------------------------------------

def random_words(seed: int, count: int, max_len: int, alphabet_cardinality: int = 2,
                 min_len: int = 1) -> List[SymbolWord]:
    """Alternating i.i.d. and periodic words, lengths uniform on [min_len, max_len].

    Item i consumes the generator in a fixed order, so a corpus of 2N words
    starts with the corpus of N words.
    """
    rng = np.random.default_rng(seed)
    words = []
    for i in range(count):
        length = int(rng.integers(min_len, max_len + 1))
        if i % 2 == 0:
            symbols = rng.integers(0, alphabet_cardinality, size=length)
        else:
            block = rng.integers(0, alphabet_cardinality, size=int(rng.integers(1, 9)))
            symbols = np.resize(block, length)
        words.append(SymbolWord(tuple(int(s) for s in symbols), alphabet_cardinality))
    return words


def h1a_corpus(seed: int, count: int, max_len: int,
               alphabet_cardinality: int = 2) -> List[Tuple[SymbolWord, SymbolWord]]:
    """(s, u) pairs with u a random non-empty prefix of s"""
    rng = np.random.default_rng([seed, 1])
    pairs = []
    for s in random_words(seed, count, max_len, alphabet_cardinality):
        pairs.append((s, s.slice(0, int(rng.integers(1, len(s) + 1)))))
    return pairs


def h1b_corpus(seed: int, count: int, max_len: int,
               alphabet_cardinality: int = 2) -> List[Tuple[SymbolWord, SymbolWord]]:
    words = random_words(seed, 2 * count, max_len, alphabet_cardinality)
    return [(words[2 * i], words[2 * i + 1]) for i in range(count)]


def h2_corpus(seed: int, count: int, max_len: int, bins_per_site: int = 2) -> List[ProductSample]:
    """Words over a two-site product alphabet with their factor coverings"""
    eps = 1.0 / bins_per_site
    covering = build_covering((0, 2), eps)
    left, right = build_covering((0, 1), eps), build_covering((1, 2), eps)
    return [ProductSample(word, covering, left, right)
            for word in random_words(seed, count, max_len, covering.alphabet_cardinality)]


def h3_lists(seed: int, lengths: Sequence[int] = (4, 8, 16), members: int = 32,
             alphabet_cardinality: int = 2) -> List[Tuple[int, List[SymbolWord]]]:
    """Enumerated lists L_n of distinct random words of length n"""
    rng = np.random.default_rng(seed)
    lists = []
    for n in lengths:
        distinct = {tuple(int(s) for s in rng.integers(0, alphabet_cardinality, size=n)) for _ in range(members)}
        lists.append((n, [SymbolWord(symbols, alphabet_cardinality) for symbols in sorted(distinct)]))
    return lists
