"""sfst module for utility functions.

Contains code to perform file IO for automata, symbol tables, corpora and
n-gram counts, plus helpers for saving experiment output.
"""

import csv
import os
import pickle
import sys
from collections import OrderedDict
import sfst.data
from sfst.automata import SymbolTable, parse_automaton, serialize_automaton
from sfst.errors import SymbolTableError
from sfst.ngram import NgramCounts

STDIO = '-'


def read_text(path):
    """Read a UTF-8 file ('-' reads stdin)."""

    if path == STDIO:
        return sys.stdin.read()
    with open(path, 'r', encoding='utf-8') as f:
        return f.read()


def write_text(text, path=STDIO):
    """Write text with LF line endings ('-' writes stdout)."""

    if path == STDIO:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(text)


def read_symbols(path, phi_label=0):
    """Load a `symbol id` symbol table file."""

    return SymbolTable.read(read_text(path), phi_id=phi_label)


def write_symbols(symbols, path=STDIO):
    write_text(symbols.write(), path)


def read_automaton(path, symbols=None, phi_label=0):
    """Parse an automaton file."""

    return parse_automaton(read_text(path), symbols, phi_label)


def write_automaton(a, path=STDIO):
    write_text(serialize_automaton(a), path)


def corpus_lines(path):
    """Lines of a corpus file without their line endings."""

    return read_text(path).splitlines()


def corpus_symbols(lines, unk='', phi_id=0):
    """SymbolTable of the whitespace-separated tokens in lines, in order of
    first appearance; unk is added when given."""

    tokens = []
    seen = set()
    for line in lines:
        for w in line.split():
            if w not in seen:
                seen.add(w)
                tokens.append(w)
    if unk and unk not in seen:
        tokens.append(unk)
    return SymbolTable.from_symbols(tokens, phi_id=phi_id)


def read_corpus(path, symbols, unk=None):
    """Map a corpus to terminator-ended label sequences.

    Args:
        path: corpus file (one sentence per line, tokens separated by
            whitespace) or a list of lines.
        symbols: SymbolTable.
        unk: symbol that unknown tokens map to; None or '' makes unknown
            tokens an error.
    Returns:
        (sentences, oov_count)
    Raises:
        SymbolTableError: unknown token and no unk symbol, reported with
            its line number.
    """

    lines = path if isinstance(path, list) else corpus_lines(path)
    term = symbols.terminator_id
    unk_id = symbols.find(unk) if unk else None
    sentences = []
    oov = 0
    for n, line in enumerate(lines, 1):
        s = []
        for w in line.split():
            try:
                s.append(symbols.find(w))
            except SymbolTableError:
                if unk_id is None:
                    raise SymbolTableError("line %i: unknown symbol %r" %
                                           (n, w))
                s.append(unk_id)
                oov += 1
        s.append(term)
        sentences.append(tuple(s))
    return sentences, oov


def write_corpus(sentences, symbols):
    """Text of label sequences, one per line, terminators dropped."""

    term = symbols.terminator_id
    return ''.join(' '.join(symbols.symbol(x) for x in s if x != term) + '\n'
                   for s in sentences)


def toy_corpus_path():
    """Location of the corpus bundled with the package."""

    return os.path.join(os.path.dirname(sfst.data.__file__),
                        'toy_corpus.txt')


def read_ngram_counts(path, symbols):
    return NgramCounts.read(read_text(path), symbols)


def write_ngram_counts(counts, path=STDIO):
    write_text(counts.write(), path)


# begin helper function definitions
def output_filter(src, key, value):
    """Filter lists contained in a dict by the value in one of the lists.

    The function takes a dict of lists, where all lists are of equal length.
    It returns a new dict where only list entries at indices that meet the
    criteria are copied.

    Args:
        src: Dictionary to filter. Each entry should be a list of equal
            length.
        key: The key in src to filter the lists by.
        value: value in src[key] to include in output (substring match for
            strings).
    Returns:
        A filtered version of src.
    """

    if isinstance(value, str):
        f = lambda v: value in v
    else:
        f = lambda v: value == v

    inds = {i for i, a in enumerate(src[key]) if f(a)}
    return {k: [a for i, a in enumerate(v) if i in inds]
            for k, v in src.items()}


def save_pkl(data, filename):
    """Save data to a .pkl file for use with Python.

    Args:
        data: a pickle-able Python object.
        filename: Output file name/location.
    """

    with open(filename, 'wb') as f:
        pickle.dump(data, f)


def save_csv(dictionary, filename):
    """Save a dict of lists to a .csv file.

    Dict keys give column headers and lists give column values. Columns are
    arranged alphabetically by header; scalar values fill a single row.

    Args:
        dictionary: The dictionary to write to file.
        filename: The name of the file to save the data to.
    """

    sorted_dict = OrderedDict(sorted(dictionary.items()))
    headers = list(sorted_dict.keys())
    values = [v if isinstance(v, list) else [v]
              for v in sorted_dict.values()]
    num_rows = max((len(v) for v in values), default=0)

    with open(filename, 'w', newline='') as f:
        writer = csv.writer(f, dialect='excel')
        writer.writerow(headers)
        for i in range(num_rows):
            writer.writerow([v[i] if i < len(v) else '' for v in values])
