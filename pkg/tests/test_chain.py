import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kinefold.chain import (
    Conformation,
    apply_deltas,
    build_chain,
    forward_kinematics,
    kinematic_state,
    link_transforms,
    measure_backbone_dihedrals,
)
from kinefold.errors import ChainBuildError, ConfigurationError, UnknownResidueError
from kinefold.geometry import rotation_about_axis

from .oracles import twist_fk


def backbone_indices(chain):
    return [i for i, nm in enumerate(chain.atom_names)
            if nm in ("N", "H", "CA", "C", "O", "OXT")]


def random_conf(chain, rng, span=360.0):
    theta = rng.uniform(0.0, span, chain.n_dof)
    return Conformation(theta, np.zeros(chain.n_dof, bool), chain.n_residues)


# ---- construction ---------------------------------------------------------

def test_single_gly_link_count():
    ch = build_chain(["GLY"])
    kinds = [l.kind for l in ch.links]
    assert kinds.count("phi") == 1 and kinds.count("psi") == 1
    assert kinds.count("chi") == 0
    assert ch.n_dof == 2


def test_polyalanine_15_links():
    ch = build_chain(["ALA"] * 15)
    assert ch.n_residues == 15
    kinds = [l.kind for l in ch.links]
    assert kinds.count("phi") + kinds.count("psi") == 30
    assert kinds.count("chi") == 15  # one methyl rotor per template
    assert ch.n_dof == 45
    assert ch.n_dof <= 6 * ch.n_residues


def test_unknown_residue_rejected():
    with pytest.raises(UnknownResidueError):
        build_chain(["XYZ"])


def test_empty_sequence_rejected():
    with pytest.raises(ChainBuildError):
        build_chain([])


def test_every_atom_has_one_link(mixed_chain):
    counted = sum(len(l.atom_indices) for l in mixed_chain.links)
    assert counted == mixed_chain.n_atoms
    assert mixed_chain.atom_residue.tolist() == sorted(mixed_chain.atom_residue.tolist())


def test_plane_constants_rows(ala2):
    assert set(ala2.geometry.plane_constants) == {"CA_C", "C_N", "C_O", "N_H"}
    c1, c2 = ala2.geometry.plane_constants["CA_C"]
    c1n, c2n = ala2.geometry.plane_constants["C_N"]
    assert c1 + c1n == pytest.approx(1.0)
    assert c2 + c2n == pytest.approx(0.0)


def test_zp_backbone_planar(mixed_chain):
    pos = forward_kinematics(mixed_chain, mixed_chain.conf_zp())
    bb = backbone_indices(mixed_chain)
    assert np.abs(pos[bb, 2]).max() < 1e-9


def test_zp_axes_unit_length(mixed_chain):
    for link in mixed_chain.links:
        if link.kind != "ground":
            assert abs(np.linalg.norm(link.axis0) - 1.0) < 1e-12


def test_cis_chain_builds_planar():
    ch = build_chain(["GLY", "GLY", "GLY"], omega="cis")
    pos = forward_kinematics(ch, ch.conf_zp())
    bb = backbone_indices(ch)
    assert np.abs(pos[bb, 2]).max() < 1e-9
    from kinefold.geometry import dihedral_angle
    omega = dihedral_angle(pos[ch.atom_index(0, "CA")], pos[ch.atom_index(0, "C")],
                           pos[ch.atom_index(1, "N")], pos[ch.atom_index(1, "CA")])
    assert abs(omega) < 1e-6  # cis


def test_trans_omega_measured():
    ch = build_chain(["GLY", "GLY"])
    pos = forward_kinematics(ch, ch.conf_zp())
    from kinefold.geometry import dihedral_angle
    omega = dihedral_angle(pos[ch.atom_index(0, "CA")], pos[ch.atom_index(0, "C")],
                           pos[ch.atom_index(1, "N")], pos[ch.atom_index(1, "CA")])
    assert abs(abs(omega) - 180.0) < 1e-6


def test_l_chirality_of_templates(mixed_chain):
    pos = forward_kinematics(mixed_chain, mixed_chain.conf_zp())
    for i, res in enumerate(mixed_chain.residues):
        if res == "GLY":
            continue
        n = pos[mixed_chain.atom_index(i, "N")]
        ca = pos[mixed_chain.atom_index(i, "CA")]
        c = pos[mixed_chain.atom_index(i, "C")]
        cb = pos[mixed_chain.atom_index(i, "CB")]
        det = np.dot(n - ca, np.cross(c - ca, cb - ca))
        assert det > 0.5  # L-amino acid


# ---- transforms -----------------------------------------------------------

def test_all_zero_gives_identity(ala2):
    for m in link_transforms(ala2, ala2.conf_zp()):
        assert np.allclose(m, np.eye(3), atol=1e-15)


def test_single_joint_prefix(ala2):
    theta = np.zeros(ala2.n_dof)
    theta[0] = 30.0
    conf = Conformation(theta, np.zeros(ala2.n_dof, bool), 2)
    mats = link_transforms(ala2, conf)
    first = rotation_about_axis(ala2.links[1].axis0, 30.0)
    for dof in range(4):  # every backbone joint downstream of joint 1
        assert np.allclose(mats[dof], first, atol=1e-12)


def test_prefix_matches_naive_products(ala2, rng):
    conf = random_conf(ala2, rng)
    mats = link_transforms(ala2, conf)
    # naive: recompute each backbone prefix from scratch
    backbone = [l for l in ala2.links if l.kind in ("phi", "psi")]
    backbone.sort(key=lambda l: l.dof)
    for j in range(len(backbone)):
        m = np.eye(3)
        for r in range(j + 1):
            m = m @ rotation_about_axis(backbone[r].axis0, conf.theta[backbone[r].dof])
        assert np.abs(m - mats[backbone[j].dof]).max() < 1e-12


def test_transforms_orthonormal(mixed_chain, rng):
    conf = random_conf(mixed_chain, rng)
    for m in link_transforms(mixed_chain, conf):
        assert np.abs(m.T @ m - np.eye(3)).max() < 1e-10


# ---- forward kinematics ---------------------------------------------------

def test_bond_lengths_invariant(mixed_chain, rng):
    zp = forward_kinematics(mixed_chain, mixed_chain.conf_zp())
    pos = forward_kinematics(mixed_chain, random_conf(mixed_chain, rng))
    for i, j in mixed_chain.bonds:
        d0 = np.linalg.norm(zp[i] - zp[j])
        d1 = np.linalg.norm(pos[i] - pos[j])
        assert abs(d0 - d1) < 1e-9


def test_intralink_rigidity(mixed_chain, rng):
    zp = forward_kinematics(mixed_chain, mixed_chain.conf_zp())
    pos = forward_kinematics(mixed_chain, random_conf(mixed_chain, rng))
    for link in mixed_chain.links:
        idx = link.atom_indices
        for a in range(len(idx)):
            for b in range(a + 1, len(idx)):
                d0 = np.linalg.norm(zp[idx[a]] - zp[idx[b]])
                d1 = np.linalg.norm(pos[idx[a]] - pos[idx[b]])
                assert abs(d0 - d1) < 1e-9


def test_anchor_fixed_at_origin(mixed_chain, rng):
    pos = forward_kinematics(mixed_chain, random_conf(mixed_chain, rng))
    assert np.allclose(pos[0], 0.0)


def test_fk_matches_twist_oracle(rng):
    ch = build_chain(["SER", "ALA", "GLY", "CYS", "ALA", "SER", "GLY",
                      "ALA", "CYS", "ALA"])
    for _ in range(3):
        conf = random_conf(ch, rng)
        fast = forward_kinematics(ch, conf)
        slow = twist_fk(ch, conf)
        assert np.abs(fast - slow).max() < 1e-9


def test_peptide_atoms_match_plane_combination(ala2, rng):
    """C, O, H track the body-vector linear combination at any conformation."""
    conf = random_conf(ala2, rng)
    state = kinematic_state(ala2, conf)
    pos = state.positions
    pc = ala2.geometry.plane_constants
    links = {(l.kind, l.residue): l for l in ala2.links if l.kind != "ground"}
    i = 0
    m_psi = state.transforms[links[("psi", i)].index]
    m_phi_next = state.transforms[links[("phi", i + 1)].index]
    b2 = m_psi @ links[("psi", i)].body0
    b3 = m_phi_next @ links[("phi", i + 1)].body0
    ca = pos[ala2.atom_index(i, "CA")]
    c = pos[ala2.atom_index(i, "C")]
    o = pos[ala2.atom_index(i, "O")]
    h = pos[ala2.atom_index(i + 1, "H")]
    n_next = pos[ala2.atom_index(i + 1, "N")]
    c1, c2 = pc["CA_C"]
    assert np.abs(ca + c1 * b2 + c2 * b3 - c).max() < 1e-9
    c1, c2 = pc["C_O"]
    assert np.abs(c + c1 * b2 + c2 * b3 - o).max() < 1e-9
    c1, c2 = pc["N_H"]
    assert np.abs(n_next + c1 * b2 + c2 * b3 - h).max() < 1e-9


def test_measured_dihedrals_match_map(mixed_chain, rng):
    phi_in = rng.uniform(-170, 170, mixed_chain.n_residues)
    psi_in = rng.uniform(-170, 170, mixed_chain.n_residues)
    conf = mixed_chain.conf_from_backbone(phi_in, psi_in)
    pos = forward_kinematics(mixed_chain, conf)
    phi, psi = measure_backbone_dihedrals(mixed_chain, pos)
    assert np.abs(phi[1:] - phi_in[1:]).max() < 1e-8
    assert np.abs(psi[:-1] - psi_in[:-1]).max() < 1e-8


# ---- conformation algebra -------------------------------------------------

@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(-1e4, 1e4, allow_nan=False), min_size=1, max_size=8),
    st.lists(st.floats(-1e4, 1e4, allow_nan=False), min_size=1, max_size=8),
)
def test_apply_deltas_wrap_property(thetas, deltas):
    k = min(len(thetas), len(deltas))
    conf = Conformation(np.array(thetas[:k]), np.zeros(k, bool), 1)
    out = apply_deltas(conf, np.array(deltas[:k]))
    assert np.all(out.theta >= 0.0) and np.all(out.theta < 360.0)
    # wrapping preserves the angle modulo a full turn
    diff = (out.theta - conf.theta - np.array(deltas[:k])) % 360.0
    assert np.all((diff < 1e-6) | (diff > 360.0 - 1e-6))


def test_apply_deltas_zero_noop(ala2):
    conf = ala2.conf_zp()
    out = apply_deltas(conf, np.zeros(ala2.n_dof))
    assert np.array_equal(out.theta, conf.theta)


def test_apply_deltas_wraps():
    conf = Conformation(np.array([359.0]), np.array([False]), 1)
    out = apply_deltas(conf, np.array([2.0]))
    assert out.theta[0] == pytest.approx(1.0)


def test_apply_deltas_respects_freeze():
    conf = Conformation(np.array([10.0, 10.0]), np.array([True, False]), 1)
    out = apply_deltas(conf, np.array([90.0, 90.0]))
    assert out.theta[0] == pytest.approx(10.0)
    assert out.theta[1] == pytest.approx(100.0)


def test_apply_deltas_length_mismatch(ala2):
    with pytest.raises(ConfigurationError):
        apply_deltas(ala2.conf_zp(), np.zeros(ala2.n_dof + 1))


def test_index_map_round_trip(mixed_chain, rng):
    phi = rng.uniform(-180, 179.9, mixed_chain.n_residues)
    psi = rng.uniform(-180, 179.9, mixed_chain.n_residues)
    chi = {}
    for link in mixed_chain.links:
        if link.kind == "chi":
            chi[(link.residue, link.chi_index)] = float(rng.uniform(-180, 179.9))
    conf = mixed_chain.theta_from_dihedrals(phi, psi, chi)
    phi2, psi2, chi2 = mixed_chain.dihedrals_from_theta(conf)
    assert np.abs(phi2 - phi).max() < 1e-9
    assert np.abs(psi2 - psi).max() < 1e-9
    for key, val in chi.items():
        assert chi2[key] == pytest.approx(val, abs=1e-9)
