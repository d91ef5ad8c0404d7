"""Unit tests for S-quad graphs."""

import dataclasses

import pytest

from src.core.exceptions import DomainError, GraphValidationError
from src.quadgraph import (
    EdgeColor,
    SQuadGraph,
    VertexKind,
    build_rectangle,
    central_extension,
    edge_key,
    euler_characteristic,
    grid_quad_graph,
    iter_s_edges,
    require_valid,
    restrict_to_G,
    umbilic_quad_graph,
    validate,
    white_neighbors,
)


def _black_fan(size: int = 6) -> SQuadGraph:
    """A black vertex surrounded by ``size`` quads."""
    whites = list(range(1, size + 1))
    outer = list(range(size + 1, 2 * size + 1))
    kinds = [VertexKind.BLACK]
    kinds += [VertexKind.SPHERE if i % 2 == 0 else VertexKind.CIRCLE for i in range(size)]
    kinds += [VertexKind.BLACK] * size
    quads = []
    colors = {}
    for i in range(size):
        w, x, w_next = whites[i], outer[i], whites[(i + 1) % size]
        quads.append((0, w, x, w_next))
        color = EdgeColor.HORIZONTAL if i % 2 == 0 else EdgeColor.VERTICAL
        colors[edge_key(0, w)] = color
        colors[edge_key(w, x)] = color.flipped()
        colors[edge_key(x, w_next)] = color
    return SQuadGraph(kinds=tuple(kinds), quads=tuple(quads), edge_colors=colors)


class TestEnums:
    """Test cases for vertex kinds and edge colors."""

    def test_vertex_kind_whites(self):
        """Test that sphere and circle vertices are white."""
        assert VertexKind.SPHERE.is_white
        assert VertexKind.CIRCLE.is_white
        assert not VertexKind.BLACK.is_white

    def test_edge_color_flip(self):
        """Test flipping edge colors."""
        assert EdgeColor.HORIZONTAL.flipped() is EdgeColor.VERTICAL
        assert EdgeColor.VERTICAL.flipped() is EdgeColor.HORIZONTAL


class TestGridQuadGraph:
    """Test cases for rectangular quad graphs."""

    def test_counts(self):
        """Test vertex, face and edge counts."""
        G = grid_quad_graph(3, 4)
        assert G.n_vertices == 12
        assert len(G.faces) == 6
        assert len(G.edges) == 2 * 4 + 3 * 3
        assert G.rectangle == (3, 4)

    def test_edge_colors(self):
        """Test that edges along the first axis are horizontal."""
        G = grid_quad_graph(2, 2)
        assert G.edge_colors[edge_key(0, 1)] is EdgeColor.HORIZONTAL
        assert G.edge_colors[edge_key(0, 2)] is EdgeColor.VERTICAL

    @pytest.mark.parametrize("size", [(1, 3), (3, 1), (0, 0)])
    def test_too_small(self, size):
        """Test that rectangles below 2 x 2 are rejected."""
        with pytest.raises(DomainError):
            grid_quad_graph(*size)


class TestCentralExtension:
    """Test cases for the central extension of a quad graph."""

    def test_smallest_rectangle(self, rectangle_2x2):
        """Test the 2 x 2 rectangle: 4 quads, one interior circle vertex."""
        g = rectangle_2x2
        assert len(g.sphere_vertices) == 4
        assert len(g.circle_vertices) == 1
        assert len(g.black_vertices) == 4
        assert len(g.quads) == 4
        assert g.interior_whites == (4,)
        assert g.central_white == 4
        assert validate(g) == []

    @pytest.mark.parametrize("I, J", [(2, 2), (3, 3), (4, 6)])
    def test_quad_count(self, I, J):
        """Test that an I x J rectangle has 4 (I - 1)(J - 1) quads."""
        g = build_rectangle(I, J)
        assert len(g.quads) == 4 * (I - 1) * (J - 1)
        assert euler_characteristic(g) == 1

    def test_labels_alternate(self, rectangle_3x3):
        """Test one sphere and one circle vertex per quad."""
        for quad in rectangle_3x3.quads:
            labels = sorted(rectangle_3x3.kinds[v].value for v in quad)
            assert labels == ["b", "b", "c", "s"]

    def test_colors_of_central_extension(self, rectangle_2x2):
        """Test that circle edges carry the opposite color of sphere edges."""
        g = rectangle_2x2
        for b in g.black_vertices:
            sphere_color = g.sphere_edge_color(b)
            for w in g.neighbors[b]:
                expected = (
                    sphere_color
                    if g.kinds[w] is VertexKind.SPHERE
                    else sphere_color.flipped()
                )
                assert g.color(w, b) is expected

    def test_non_quadrilateral_face(self):
        """Test that only quad faces are extended."""
        G = dataclasses.replace(grid_quad_graph(2, 2), faces=((0, 1, 3),))
        with pytest.raises(GraphValidationError):
            central_extension(G)

    def test_missing_edge_color(self):
        """Test that every edge of G needs a color."""
        G = grid_quad_graph(2, 2)
        colors = dict(G.edge_colors)
        colors.pop(edge_key(0, 1))
        with pytest.raises(GraphValidationError):
            central_extension(dataclasses.replace(G, edge_colors=colors))

    def test_restrict_to_G_round_trip(self, rectangle_3x3):
        """Test that restricting and extending reproduces the graph."""
        G = restrict_to_G(rectangle_3x3)
        assert G.n_vertices == 9
        assert len(G.faces) == 4
        again = central_extension(G)
        assert again.kinds == rectangle_3x3.kinds
        assert len(again.quads) == len(rectangle_3x3.quads)
        assert validate(again) == []


class TestNavigation:
    """Test cases for neighbourhoods and derived structure."""

    def test_corners_counterclockwise(self, rectangle_2x2):
        """Test corner order starting at the bottom-left."""
        assert rectangle_2x2.corners == (0, 1, 3, 2)

    def test_white_neighbors_of_center(self, rectangle_2x2):
        """Test the white neighbours of the interior circle vertex."""
        neighbours = white_neighbors(rectangle_2x2, 4)
        assert sorted(neighbours) == [0, 1, 2, 3]

    def test_white_neighbors_rejects_black(self, rectangle_2x2):
        """Test that black vertices have no white neighbourhood."""
        with pytest.raises(DomainError):
            white_neighbors(rectangle_2x2, rectangle_2x2.black_vertices[0])

    def test_rotation_of_interior_vertex(self, rectangle_3x3):
        """Test the closed rotation of the interior sphere vertex."""
        g = rectangle_3x3
        rotation = g.rotation(4)
        assert rotation.closed
        assert len(rotation.sequence) == 8
        assert all(g.kinds[v] is VertexKind.BLACK for v in rotation.edge_neighbors)
        assert all(g.kinds[v] is VertexKind.CIRCLE for v in rotation.diagonal_neighbors)

    def test_rotation_of_corner(self, rectangle_2x2):
        """Test the open rotation at a corner."""
        rotation = rectangle_2x2.rotation(0)
        assert not rotation.closed
        assert len(rotation.edge_neighbors) == 2
        assert rotation.diagonal_neighbors == (4,)

    def test_faces_of_G(self, rectangle_3x3):
        """Test that each circle vertex sees four sphere vertices."""
        faces = rectangle_3x3.faces_of_G
        assert len(faces) == 4
        assert all(len(face) == 4 for face in faces.values())
        assert set(rectangle_3x3.faces_of_G_star) == {4}

    def test_g_edges(self, rectangle_3x3):
        """Test one G edge per black vertex."""
        edges = rectangle_3x3.g_edges
        assert len(edges) == len(rectangle_3x3.black_vertices)
        colors = [color for *_, color in edges]
        assert colors.count(EdgeColor.HORIZONTAL) == 6

    def test_iter_s_edges(self, rectangle_2x2):
        """Test that S-edges are reported white first."""
        edges = list(iter_s_edges(rectangle_2x2))
        assert len(edges) == len(rectangle_2x2.edges)
        assert all(rectangle_2x2.kinds[w].is_white for w, _, _ in edges)


class TestUmbilic:
    """Test cases for graphs with a degree-6 sphere vertex."""

    def test_umbilic_is_valid(self):
        """Test that the glued sectors give a valid S-quad graph."""
        g = central_extension(umbilic_quad_graph(2, 3))
        assert validate(g) == []
        assert g.degree(0) == 6
        assert not g.is_boundary(0)
        assert len(white_neighbors(g, 0)) == 6

    def test_invalid_parameters(self):
        """Test rejection of degenerate umbilic parameters."""
        with pytest.raises(DomainError):
            umbilic_quad_graph(0, 3)


class TestValidation:
    """Test cases for S-quad graph validation."""

    def test_two_sphere_vertices_in_a_quad(self, rectangle_2x2):
        """Test the labeling violation."""
        kinds = list(rectangle_2x2.kinds)
        kinds[4] = VertexKind.SPHERE
        broken = dataclasses.replace(rectangle_2x2, kinds=tuple(kinds))
        violations = validate(broken)
        assert any(v.startswith("labeling") for v in violations)

    def test_black_vertex_of_degree_six(self):
        """Test the black degree violation."""
        violations = validate(_black_fan(6))
        assert len(violations) == 1
        assert violations[0].startswith("black degree")

    def test_black_fan_of_four_is_valid(self):
        """Test that the same fan with four quads passes."""
        assert validate(_black_fan(4)) == []

    def test_require_valid_raises(self):
        """Test that require_valid reports all violations."""
        with pytest.raises(GraphValidationError) as exc_info:
            require_valid(_black_fan(6))
        assert exc_info.value.context["violations"]

    def test_uncolored_edge(self, rectangle_2x2):
        """Test the missing color violation."""
        colors = dict(rectangle_2x2.edge_colors)
        colors.pop(rectangle_2x2.edges[0])
        broken = dataclasses.replace(rectangle_2x2, edge_colors=colors)
        assert any(v.startswith("edge color missing") for v in validate(broken))


class TestSerialization:
    """Test cases for graph documents."""

    def test_document_round_trip(self, rectangle_3x3):
        """Test to_document followed by from_document."""
        document = rectangle_3x3.to_document()
        assert document["schema_version"] == 1
        g = SQuadGraph.from_document(document)
        assert g.kinds == rectangle_3x3.kinds
        assert g.quads == rectangle_3x3.quads
        assert dict(g.edge_colors) == dict(rectangle_3x3.edge_colors)
        assert g.coords == rectangle_3x3.coords

    def test_unsupported_version(self, rectangle_2x2):
        """Test that unknown schema versions are rejected."""
        document = rectangle_2x2.to_document()
        document["schema_version"] = 99
        with pytest.raises(GraphValidationError):
            SQuadGraph.from_document(document)

    def test_malformed_document(self):
        """Test that missing keys are reported as validation errors."""
        with pytest.raises(GraphValidationError):
            SQuadGraph.from_document({"schema_version": 1, "vertices": []})
