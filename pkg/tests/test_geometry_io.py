import json

import numpy as np
import pytest

from overlap_dgiga.builders import block_multipatch
from overlap_dgiga.cases import get_example
from overlap_dgiga.errors import TopologyError
from overlap_dgiga.geometry import make_overlap
from overlap_dgiga.geometry_io import GeometryFileError, dump, dumps, load, loads, to_dict


def line_of(text, needle, start=0):
    return text.count("\n", 0, text.index(needle, start)) + 1


class TestRoundTrip:
    @pytest.mark.parametrize("name", ["smooth", "box3d"])
    def test_dumps_loads(self, name):
        mp = get_example(name).build(2, 2, False)
        back = loads(dumps(mp))
        assert back.interfaces == mp.interfaces
        assert back.dirichlet == mp.dirichlet
        for p, q in zip(mp.patches, back.patches):
            assert p.space == q.space
            np.testing.assert_array_equal(p.control_points, q.control_points)

    def test_overlap_kind_survives(self, tmp_path):
        mp = make_overlap(block_multipatch([[0, 1, 2], [0, 1]], 2, 2), 0, 0.1)
        path = tmp_path / "g.json"
        dump(mp, path)
        back = load(path)
        assert back.interfaces[0].kind == "overlap"
        assert back.interfaces[0].width == pytest.approx(0.1)


class TestDiagnostics:
    def base_text(self):
        return dumps(block_multipatch([[0, 1, 2], [0, 1]], 1, 1))

    def test_bad_side_line(self):
        text = self.base_text()
        start = text.index('"interfaces"')
        bad = text[:start] + text[start:].replace('"hi"', '"top"', 1)
        with pytest.raises(GeometryFileError) as info:
            loads(bad)
        assert info.value.line == line_of(bad, '"top"')
        assert info.value.path == ("interfaces", 0, "a", "side")
        assert str(info.value).startswith("line %d:" % info.value.line)

    def test_syntax_error_line(self):
        text = self.base_text()
        lines = text.splitlines()
        lines[5] = lines[5] + " ,,"
        with pytest.raises(GeometryFileError) as info:
            loads("\n".join(lines))
        assert info.value.line == 6

    def test_missing_key(self):
        doc = to_dict(block_multipatch([[0, 1], [0, 1]], 1, 1))
        del doc["dirichlet"]
        with pytest.raises(GeometryFileError, match="dirichlet"):
            loads(json.dumps(doc, indent=1))

    def test_wrong_type_in_control_points(self):
        doc = to_dict(block_multipatch([[0, 1], [0, 1]], 1, 1))
        doc["patches"][0]["control_points"][2][1] = "x"
        text = json.dumps(doc, indent=1)
        with pytest.raises(GeometryFileError) as info:
            loads(text)
        assert info.value.path == ("patches", 0, "control_points", 2, 1)
        assert info.value.line == line_of(text, '"x"')

    def test_topology_checked_after_schema(self):
        doc = to_dict(block_multipatch([[0, 1, 2], [0, 1]], 1, 1))
        doc["dirichlet"].pop()
        with pytest.raises(TopologyError):
            loads(json.dumps(doc))
