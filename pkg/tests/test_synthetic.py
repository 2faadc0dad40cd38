import filecmp

import numpy as np

from exploitwatch.features import DEFAULT_SCHEMA, Category, Kind
from exploitwatch.synthetic import make_imbalanced, write_fixture_corpus


def test_make_imbalanced_shape_and_kinds():
    X, y = make_imbalanced(400, 0.05, seed=1)
    assert X.shape == (400, 79) and y.sum() == 20
    words = DEFAULT_SCHEMA.indices(Category.WORDS) + DEFAULT_SCHEMA.indices(Category.TWITTER_STATS)
    assert (X[:, words] >= 0).all() and np.all(X[:, words] == np.floor(X[:, words]))
    binary = [s.index for s in DEFAULT_SCHEMA if s.kind is Kind.BINARY]
    assert set(np.unique(X[:, binary])) <= {0.0, 1.0}
    ordinal = [s.index for s in DEFAULT_SCHEMA if s.kind is Kind.ORDINAL]
    assert set(np.unique(X[:, ordinal])) <= {-1.0, 0.0, 1.0, 2.0, 3.0}
    np.testing.assert_array_equal(make_imbalanced(400, 0.05, seed=1)[0], X)


def test_committed_fixture_matches_generator(tmp_path, fixture_corpus):
    write_fixture_corpus(tmp_path)
    cmp = filecmp.dircmp(tmp_path, fixture_corpus, ignore=["out"])

    def same(c):
        if c.left_only or c.right_only or c.diff_files or c.funny_files:
            return False
        _, mismatch, errors = filecmp.cmpfiles(c.left, c.right, c.common_files, shallow=False)
        return not mismatch and not errors and all(same(s) for s in c.subdirs.values())
    assert same(cmp)
