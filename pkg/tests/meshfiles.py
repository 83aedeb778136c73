"""Tiny mesh-file writers used as test fixtures (the package only reads)."""

import struct

import numpy as np


def write_stl_ascii(path, tri_points, name="part"):
    with open(path, "w") as fh:
        fh.write(f"solid {name}\n")
        for tri in tri_points:
            a, b, c = (np.asarray(p, dtype=float) for p in tri)
            n = np.cross(b - a, c - a)
            ln = np.linalg.norm(n)
            n = n / ln if ln else n
            fh.write(f"  facet normal {n[0]:.6e} {n[1]:.6e} {n[2]:.6e}\n")
            fh.write("    outer loop\n")
            for p in (a, b, c):
                fh.write(f"      vertex {p[0]:.9g} {p[1]:.9g} {p[2]:.9g}\n")
            fh.write("    endloop\n")
            fh.write("  endfacet\n")
        fh.write(f"endsolid {name}\n")


def write_stl_binary(path, tri_points):
    tri_points = np.asarray(tri_points, dtype=np.float64)
    with open(path, "wb") as fh:
        fh.write(b"\0" * 80)
        fh.write(struct.pack("<I", len(tri_points)))
        for tri in tri_points:
            a, b, c = tri
            n = np.cross(b - a, c - a)
            ln = np.linalg.norm(n)
            if ln:
                n = n / ln
            fh.write(struct.pack("<3f", *n))
            for p in (a, b, c):
                fh.write(struct.pack("<3f", *p))
            fh.write(struct.pack("<H", 0))


def mesh_to_soup(mesh):
    return mesh.vertices[mesh.triangles]


def write_ply_ascii_mesh(path, vertices, faces):
    with open(path, "w") as fh:
        fh.write("ply\nformat ascii 1.0\n")
        fh.write(f"element vertex {len(vertices)}\n")
        fh.write("property double x\nproperty double y\nproperty double z\n")
        fh.write(f"element face {len(faces)}\n")
        fh.write("property list uchar int vertex_indices\n")
        fh.write("end_header\n")
        for v in vertices:
            fh.write(f"{v[0]:.9g} {v[1]:.9g} {v[2]:.9g}\n")
        for f in faces:
            fh.write("3 " + " ".join(str(int(i)) for i in f) + "\n")


def write_ply_binary_mesh(path, vertices, faces):
    with open(path, "wb") as fh:
        header = (
            "ply\nformat binary_little_endian 1.0\n"
            f"element vertex {len(vertices)}\n"
            "property float x\nproperty float y\nproperty float z\n"
            f"element face {len(faces)}\n"
            "property list uchar int vertex_indices\n"
            "end_header\n"
        )
        fh.write(header.encode("ascii"))
        fh.write(np.asarray(vertices, dtype="<f4").tobytes())
        for f in faces:
            fh.write(struct.pack("<B3i", 3, *[int(i) for i in f]))


def write_obj(path, vertices, faces):
    with open(path, "w") as fh:
        for v in vertices:
            fh.write(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}\n")
        for f in faces:
            fh.write("f " + " ".join(str(int(i) + 1) for i in f) + "\n")
