import pytest

from doflab.channel import (
    ChannelRealization,
    CsitConfig,
    CsitState,
    CsitVisibilityError,
    block_diagonal,
    csit_view,
    invisible_positions,
    sample_channel,
    slot_is_generic,
)
from doflab.exactlin import rank


def test_parse_config():
    c = CsitConfig.parse("PDN")
    assert c.k == 3
    assert (c.P, c.D, c.N) == ((0,), (1,), (2,))
    assert c.state(1) is CsitState.D
    assert str(c) == "PDN"
    assert CsitConfig.parse(["P", "P"]) == CsitConfig.parse("PP")
    assert CsitConfig.parse("p,d") == CsitConfig.parse("PD")


@pytest.mark.parametrize("bad", ["", "PXZ", "PD7"])
def test_parse_rejects_bad_strings(bad):
    with pytest.raises(ValueError):
        CsitConfig.parse(bad)


def test_permuted():
    assert str(CsitConfig.parse("PDN").permuted([2, 0, 1])) == "NPD"


def test_sampling_is_deterministic_and_generic():
    a = sample_channel(3, 3, 4, seed=11)
    b = sample_channel(3, 3, 4, seed=11)
    assert a == b
    assert a != sample_channel(3, 3, 4, seed=12)
    for t in range(4):
        assert rank(a.slot_matrix(t)) == 3
        assert slot_is_generic([a.g(j, t) for j in range(3)], 3, 3)


def test_generic_check_catches_degenerate_minor():
    assert not slot_is_generic([(1, 2), (2, 4)], 2, 2)
    assert slot_is_generic([(0, 1), (1, 0)], 2, 2)


def test_json_round_trip():
    ch = sample_channel(2, 2, 3, seed=5)
    again = ChannelRealization.from_json(ch.to_json())
    assert again == ch
    assert all("/" in x for row in ch.to_dict()["entries"][0] for x in row)


def test_with_rows_replaces_only_named_rows():
    ch = sample_channel(2, 2, 2, seed=1)
    new = ch.with_rows({(1, 0): (3, 4)})
    assert new.g(1, 0) == (3, 4)
    assert new.g(0, 0) == ch.g(0, 0) and new.g(1, 1) == ch.g(1, 1)


def test_block_diagonal_shape():
    ch = sample_channel(2, 3, 4, seed=2)
    G = block_diagonal(ch, 0)
    assert G.shape == (4, 12)
    assert G.row(1)[3:6] == ch.g(0, 1)
    assert G.row(1)[:3] == (0, 0, 0)


class TestView:
    ch = sample_channel(3, 3, 3, seed=4)
    cfg = CsitConfig.parse("PDN")

    def test_visibility_by_state(self):
        v = csit_view(self.cfg, self.ch, 1)
        assert v.row(0, 1) == self.ch.g(0, 1)
        assert v.row(1, 0) == self.ch.g(1, 0)
        assert not v.visible(1, 1)
        assert not v.visible(2, 0)
        with pytest.raises(CsitVisibilityError):
            v.row(1, 1)
        with pytest.raises(CsitVisibilityError):
            v.row(2, 0)

    def test_first_slot_delayed_sees_nothing(self):
        v = csit_view(CsitConfig.parse("DDN"), self.ch, 0)
        assert v.is_empty()

    def test_rewind_matches_fresh_view(self):
        late = csit_view(self.cfg, self.ch, 2)
        assert late.at(1) == csit_view(self.cfg, self.ch, 1)
        with pytest.raises(ValueError):
            csit_view(self.cfg, self.ch, 1).at(2)

    def test_invisible_positions_complement_view(self):
        for t in range(3):
            v = csit_view(self.cfg, self.ch, t)
            hidden = set(invisible_positions(self.cfg, 3, t))
            for j in range(3):
                for s in range(3):
                    assert v.visible(j, s) == ((j, s) not in hidden)

    def test_views_hashable(self):
        assert hash(csit_view(self.cfg, self.ch, 1)) == hash(csit_view(self.cfg, self.ch, 1))
