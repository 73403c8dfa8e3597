"""Synthetic bibliographic corpora with gold token labels.

Documents get pseudo-random authors, titles, journals, years and pages.
Citations of a document are rendered through one of several reference
styles, optionally perturbed: given names cut to initials, journal words
abbreviated by prefix truncation ("applied" -> "appl.") or by dropping
vowels ("journal" -> "jrnl"), one-character typos, fields reordered.
Every rendered token carries the label of the field it came from.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .parsing.tagger import TokenLabel
from .records import DocumentRecord
from .tokenizer import Token, tokenize

A, T, S, Y, P, O = (
    TokenLabel.AUTHOR,
    TokenLabel.TITLE,
    TokenLabel.SOURCE,
    TokenLabel.YEAR,
    TokenLabel.PAGES,
    TokenLabel.OTHER,
)

GIVEN = (
    "Adam Alice Andrew Anna Barbara Bruno Carlos Clara Daniel Dominika Elena Emil Eva Felix "
    "Georg Hanna Henrik Ines Igor Jakub Jane Jan John Julia Karl Katarzyna Laura Leon Lukas "
    "Maria Marek Mateusz Michael Nadia Olga Oscar Paula Peter Rafael Rosa Samuel Sofia Stefan "
    "Tomasz Ursula Victor Wanda Xavier Yusuf Zofia Agnieszka Bernard Cecilia Dmitri Erik Fiona"
).split()

_ONSETS = "b br c ch d dr f g gr h j k kl kr l m n p pr r s sch st t tr v w z".split()
_VOWELS = "a e i o u au ei ie oo y".split()
_CODAS = ["", "", "n", "r", "s", "k", "l", "m", "t", "nd", "rt", "ck"]
_SUFFIXES = ["", "", "", "son", "ski", "er", "man", "berg", "ov", "ez", "ini", "ford", "ley"]

TITLE_WORDS = (
    "adaptive algorithm analysis approach approximate automatic bayesian citation classification "
    "clustering complexity computation constraint data database decision deep design detection "
    "discovery distributed dynamic efficient entity estimation evaluation evolutionary extraction "
    "fast framework fuzzy graph heuristic hierarchical hybrid image incremental indexing inference "
    "information integration interactive knowledge language large learning linear logic matching "
    "memory method mining model modeling multiple natural network networks neural nonlinear "
    "optimal optimization parallel parsing performance planning probabilistic processing query "
    "random reasoning recognition record reinforcement representation retrieval robust scalable "
    "scale search semantic sequence similarity simulation sparse spatial speech statistical "
    "stochastic structure structured support system systems temporal text theory towards "
    "training tree uncertain unsupervised vector visual web"
).split()
TITLE_GLUE = "for of in with and using on via".split()

JOURNAL_TOPICS = (
    "Machine Learning; Artificial Intelligence; Information Retrieval; Data Engineering; "
    "Computational Linguistics; Neural Computation; Pattern Recognition; Knowledge Discovery; "
    "Applied Mathematics; Theoretical Computer Science; Database Systems; Information Processing; "
    "Computer Vision; Digital Libraries; Parallel Computing; Operations Research; Statistical Science; "
    "Software Engineering; Computational Biology; Information Systems"
).split("; ")
JOURNAL_PATTERNS = (
    "Journal of {}",
    "International Journal of {}",
    "Transactions on {}",
    "Annals of {}",
    "{} Letters",
    "Proceedings of the Conference on {}",
    "Applied {} Review",
    "Journal of Applied {}",
)
_STOP = {"of", "the", "on", "and", "in", "for"}


def make_surnames(rng: random.Random, n: int) -> List[str]:
    names = set()
    while len(names) < n:
        parts = [rng.choice(_ONSETS) + rng.choice(_VOWELS) + rng.choice(_CODAS) for _ in range(rng.randint(1, 3))]
        name = "".join(parts) + rng.choice(_SUFFIXES)
        if 4 <= len(name) <= 13:
            names.add(name.capitalize())
    return sorted(names)


def make_journals() -> List[str]:
    return [pat.format(topic) for topic in JOURNAL_TOPICS for pat in JOURNAL_PATTERNS]


@dataclass
class Vocabulary:
    surnames: List[str]
    given: Sequence[str]
    journals: List[str]

    @classmethod
    def create(cls, rng: random.Random, n_docs: int) -> "Vocabulary":
        return cls(make_surnames(rng, max(200, n_docs)), GIVEN, make_journals())


def make_document(rng: random.Random, vocab: Vocabulary, doc_id: str) -> DocumentRecord:
    n_auth = rng.choice((1, 1, 2, 2, 2, 3, 3, 4))
    authors = tuple(f"{rng.choice(vocab.given)} {rng.choice(vocab.surnames)}" for _ in range(n_auth))
    words = []
    for k in range(rng.randint(4, 9)):
        if k and rng.random() < 0.2:
            words.append(rng.choice(TITLE_GLUE))
        words.append(rng.choice(TITLE_WORDS))
    title = " ".join(words)
    title = title[0].upper() + title[1:]
    start = rng.randint(1, 900)
    pages = frozenset((start, start + rng.randint(4, 30)))
    return DocumentRecord(
        id=doc_id,
        authors=authors,
        title=title,
        journal=rng.choice(vocab.journals),
        year=rng.randint(1965, 2013),
        pages=pages,
    )


# -- perturbations -----------------------------------------------------------


def typo(rng: random.Random, word: str) -> str:
    """One substitution, deletion or insertion inside ``word``."""
    if len(word) < 4:
        return word
    i = rng.randrange(1, len(word) - 1)
    letter = rng.choice("abcdefghijklmnopqrstuvwxyz")
    op = rng.randrange(3)
    if op == 0:
        return word[:i] + letter + word[i + 1 :]
    if op == 1:
        return word[:i] + word[i + 1 :]
    return word[:i] + letter + word[i:]


def drop_vowels(word: str) -> str:
    return word[0] + "".join(ch for ch in word[1:] if ch.lower() not in "aeiou")


def abbreviate_journal(rng: random.Random, journal: str) -> str:
    out = []
    style = rng.randrange(3)
    for w in journal.split():
        if w.lower() in _STOP:
            continue
        if len(w) <= 4:
            out.append(w)
        elif style == 0:
            out.append(w[: rng.randint(3, 5)] + ".")
        elif style == 1:
            out.append(drop_vowels(w))
        else:
            out.append(w[: rng.randint(3, 5)] + "." if rng.random() < 0.5 else drop_vowels(w))
    return " ".join(out)


# -- rendering ---------------------------------------------------------------

Piece = Tuple[str, TokenLabel, bool]  # text, label, glued to previous piece


def _word_pieces(text: str, label: TokenLabel) -> List[Piece]:
    return [(w, label, False) for w in text.split()]


def _author_pieces(rng: random.Random, doc: DocumentRecord, style: int, initials: bool) -> List[Piece]:
    names = []
    for full in doc.authors:
        given, surname = full.rsplit(" ", 1)
        if rng.random() < 0.15:
            surname = typo(rng, surname)
        if initials:
            g = [(given[0], A, False)] + ([(".", A, True)] if rng.random() < 0.8 else [])
        else:
            g = [(given, A, False)]
        if style == 1:
            names.append(g + [(surname, A, False)])
        else:
            # every comma of the author block is punctuation (Other): a
            # name-internal comma looks just like a separator in
            # "Surname, Given, Surname, Given" lists
            names.append([(surname, A, False), (",", O, True)] + g)
    if len(names) > 3 and rng.random() < 0.3:
        return names[0] + [("et", O, False), ("al", O, False), (".", O, True)]
    out: List[Piece] = []
    for k, name in enumerate(names):
        if k:
            if k == len(names) - 1 and rng.random() < 0.6:
                out += [(",", O, True)] if style == 0 and len(names) > 2 else []
                out.append(("and" if style != 2 else "&", O, False))
            else:
                out.append((",", O, True))
        out += name
    return out


def _pages_pieces(rng: random.Random, doc: DocumentRecord) -> List[Piece]:
    lo, hi = min(doc.pages), max(doc.pages)
    dash = rng.choice(("-", "--", "–"))
    out: List[Piece] = []
    if rng.random() < 0.3:
        out += [("pp", O, False), (".", O, True)]
    out += [(str(lo), P, False)] + [(d, P, True) for d in dash] + [(str(hi), P, True)]
    return out


def render_pieces(rng: random.Random, doc: DocumentRecord, template: Optional[int] = None, perturb: bool = True) -> List[Piece]:
    template = rng.randrange(3) if template is None else template
    initials = rng.random() < 0.7 if perturb else False
    journal = doc.journal
    if perturb and rng.random() < 0.6:
        journal = abbreviate_journal(rng, journal)
    title = doc.title
    if perturb and rng.random() < 0.35:
        words = title.split()
        k = rng.randrange(len(words))
        words[k] = typo(rng, words[k])
        title = " ".join(words)
    vol = str(1 + (sum(map(ord, doc.id)) % 60))
    authors = _author_pieces(rng, doc, template, initials)
    title_p = _word_pieces(title, T)
    source = _word_pieces(journal, S)
    year = [(str(doc.year), Y, False)]
    pages = _pages_pieces(rng, doc)
    if template == 0:
        # Surname, G.: Title. Journal 12, 120-135 (1996)
        out = authors + [(":", O, True)] + title_p + [(".", O, True)] + source
        out += [(vol, O, False), (",", O, True)] + pages + [("(", O, False)] + [(y, Y, True) for y, _, _ in year] + [(")", O, True)]
    elif template == 1:
        # G. Surname and G. Surname. Title. Journal, 12(3):120-135, 1996.
        out = authors + [(".", O, True)] + title_p + [(".", O, True)] + source + [(",", O, True)]
        out += [(vol, O, False), ("(", O, True), (str(1 + len(doc.title) % 4), O, True), (")", O, True), (":", O, True)]
        out += [(t, lab, True if k == 0 else g) for k, (t, lab, g) in enumerate(pages)]
        out += [(",", O, True)] + year + [(".", O, True)]
    else:
        # Surname, G., & Surname, G. (1996). Title. Journal, 12, 120-135.
        out = authors + [("(", O, False), (str(doc.year), Y, True), (")", O, True), (".", O, True)]
        out += title_p + [(".", O, True)] + source + [(",", O, True), (vol, O, False), (",", O, True)] + pages + [(".", O, True)]
    return out


def assemble_pieces(pieces: Sequence[Piece]) -> Tuple[str, List[Token], List[TokenLabel]]:
    """Join pieces into a string and label its tokens by originating piece."""
    chars: List[str] = []
    owner: List[TokenLabel] = []
    for k, (text, label, glued) in enumerate(pieces):
        if k and not glued:
            chars.append(" ")
            owner.append(O)
        chars.extend(text)
        owner.extend([label] * len(text))
    raw = "".join(chars)
    tokens = tokenize(raw)
    labels = []
    for tok in tokens:
        labs = set(owner[tok.start : tok.end])
        if len(labs) != 1:
            raise AssertionError(f"token {tok.text!r} spans several fields")
        labels.append(labs.pop())
    return raw, tokens, labels


@dataclass
class LabeledCitation:
    raw: str
    tokens: List[Token]
    labels: List[TokenLabel]
    target: str


def render_citation(rng: random.Random, doc: DocumentRecord, template: Optional[int] = None, perturb: bool = True) -> LabeledCitation:
    raw, tokens, labels = assemble_pieces(render_pieces(rng, doc, template, perturb))
    return LabeledCitation(raw, tokens, labels, doc.id)


# -- corpora -----------------------------------------------------------------


@dataclass
class SyntheticCorpus:
    documents: List[DocumentRecord]
    citations: List[LabeledCitation]
    # (citing doc id, reference index) -> cited doc id
    links: Dict[Tuple[str, int], str]


def make_corpus(
    n_docs: int,
    cites_per_doc: Tuple[int, int] = (3, 6),
    seed: int = 0,
    templates: Sequence[int] = (0, 1, 2),
    perturb: bool = True,
    n_citations: Optional[int] = None,
) -> SyntheticCorpus:
    """``n_docs`` documents citing each other.

    Each document is cited ``cites_per_doc`` times (inclusive range), unless
    ``n_citations`` fixes the total, in which case targets are drawn
    uniformly.  Every citation lands in the reference list of a random
    other document.
    """
    rng = random.Random(seed)
    vocab = Vocabulary.create(rng, n_docs)
    width = len(str(n_docs))
    docs = [make_document(rng, vocab, f"doc{k:0{width}d}") for k in range(n_docs)]
    if n_citations is None:
        targets = [d for d in docs for _ in range(rng.randint(*cites_per_doc))]
    else:
        targets = [rng.choice(docs) for _ in range(n_citations)]
    refs: Dict[str, List[str]] = {d.id: [] for d in docs}
    links = {}
    citations = []
    for doc in targets:
        c = render_citation(rng, doc, rng.choice(templates), perturb)
        citer = doc.id
        if n_docs > 1:
            while citer == doc.id:
                citer = rng.choice(docs).id
        links[(citer, len(refs[citer]))] = doc.id
        refs[citer].append(c.raw)
        citations.append(c)
    documents = [
        DocumentRecord(d.id, d.authors, d.title, d.journal, d.year, d.pages, tuple(refs[d.id])) for d in docs
    ]
    return SyntheticCorpus(documents, citations, links)


def template_citations(n: int, templates: Sequence[int] = (0, 1), seed: int = 0) -> List[LabeledCitation]:
    """``n`` unperturbed citations of fresh documents, cycling ``templates``."""
    rng = random.Random(seed)
    vocab = Vocabulary.create(rng, n)
    out = []
    for k in range(n):
        doc = make_document(rng, vocab, f"t{k}")
        out.append(render_citation(rng, doc, templates[k % len(templates)], perturb=False))
    return out
