import csv
import os
import pytest
import sfst.util as su
from sfst.automata import SymbolTable
from sfst.errors import SymbolTableError


@pytest.fixture
def sy():
    return SymbolTable.from_symbols(['the', 'cat', 'sat', '<unk>'])


class TestCorpus:

    def test_read_corpus(self, sy):
        sentences, oov = su.read_corpus(['the cat', 'cat sat the', ''], sy)
        term = sy.terminator_id
        assert sentences == [(1, 2, term), (2, 3, 1, term), (term,)]
        assert oov == 0

    def test_unknown_word_maps_to_unk(self, sy):
        sentences, oov = su.read_corpus(['the dog', 'dog dog'], sy,
                                        unk='<unk>')
        assert sentences[1] == (4, 4, sy.terminator_id)
        assert oov == 3

    def test_unknown_word_reports_line(self, sy):
        with pytest.raises(SymbolTableError) as e:
            su.read_corpus(['the cat', 'the dog'], sy)
        assert 'line 2' in str(e.value)
        assert "'dog'" in str(e.value)

    def test_read_corpus_file(self, sy, tmp_path):
        path = tmp_path / 'corpus.txt'
        path.write_text('the cat\nsat\n', encoding='utf-8')
        sentences, _ = su.read_corpus(str(path), sy)
        assert len(sentences) == 2

    def test_write_corpus(self, sy):
        term = sy.terminator_id
        text = su.write_corpus([(1, 2, term), (term,)], sy)
        assert text == 'the cat\n\n'

    def test_corpus_symbols(self):
        table = su.corpus_symbols(['b a', 'a c b'], unk='<unk>')
        assert [table.symbol(i) for i in table.labels()] == \
            ['b', 'a', 'c', '<unk>', '$']
        assert table.phi_id == 0

    def test_toy_corpus(self):
        path = su.toy_corpus_path()
        assert os.path.isfile(path)
        lines = su.corpus_lines(path)
        table = su.corpus_symbols(lines)
        sentences, oov = su.read_corpus(lines, table)
        assert len(sentences) == len(lines) > 0
        assert oov == 0


class TestFiles:

    def test_automaton_round_trip(self, tmp_path, backoff_chain):
        path = str(tmp_path / 'chain.fst')
        su.write_automaton(backoff_chain, path)
        back = su.read_automaton(path, backoff_chain.symbols)
        assert back == backoff_chain

    def test_symbols_round_trip(self, tmp_path, sy):
        path = str(tmp_path / 'syms.txt')
        su.write_symbols(sy, path)
        assert su.read_symbols(path) == sy

    def test_write_text_stdout(self, capsys):
        su.write_text('0 1 1 0\n')
        assert capsys.readouterr().out == '0 1 1 0\n'

    def test_read_text_missing(self, tmp_path):
        with pytest.raises(OSError):
            su.read_text(str(tmp_path / 'missing.fst'))


class TestOutputHelpers:

    def test_output_filter(self):
        src = {'method': ['kl_min', 'katz', 'kl_min'], 'kl': [0.1, 0.3, 0.2]}
        assert su.output_filter(src, 'method', 'kl') == \
            {'method': ['kl_min', 'kl_min'], 'kl': [0.1, 0.2]}
        assert su.output_filter(src, 'kl', 0.3) == \
            {'method': ['katz'], 'kl': [0.3]}

    def test_save_csv(self, tmp_path):
        path = str(tmp_path / 'out.csv')
        su.save_csv({'b': [1, 2], 'a': [3, 4, 5], 'c': 'x'}, path)
        with open(path, newline='') as f:
            rows = list(csv.reader(f))
        assert rows[0] == ['a', 'b', 'c']
        assert rows[1] == ['3', '1', 'x']
        assert rows[3] == ['5', '', '']
        assert len(rows) == 4
