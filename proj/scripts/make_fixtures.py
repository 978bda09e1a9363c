#!/usr/bin/env python3
"""Regenerate the SMILES fixtures under tests/data/.

Needs RDKit and the MOSES training split (train.csv.gz from the `molsets`
wheel). Only used offline; the generated files are committed.

  moses_sample.smi  2,000 molecules drawn from the MOSES training split
  qm9_like.smi      1,000 small molecules (<= 9 heavy atoms, C/N/O/F, neutral)
                    carved out of MOSES molecules by ring-aware growth
  fixture32.smi     first 32 lines of qm9_like.smi
  fixture10.smi     first 10 lines of qm9_like.smi
"""
import gzip
import random
import sys

from rdkit import Chem, RDLogger

RDLogger.DisableLog("rdApp.*")

ALLOWED = {"C", "N", "O", "F"}


def read_moses(path):
    with gzip.open(path, "rt") as fh:
        next(fh)
        return [line.split(",")[0].strip() for line in fh]


def carve(mol, rng, max_atoms=9):
    ri = mol.GetRingInfo()
    rings = [set(r) for r in ri.AtomRings()]
    start = rng.randrange(mol.GetNumAtoms())
    keep = {start}
    for r in rings:
        if start in r:
            keep |= r
    if len(keep) > max_atoms:
        return None
    frontier = True
    while frontier:
        cand = sorted({n.GetIdx() for a in keep for n in mol.GetAtomWithIdx(a).GetNeighbors()} - keep)
        rng.shuffle(cand)
        frontier = False
        for c in cand:
            add = {c}
            for r in rings:
                if c in r:
                    add |= r
            if len(keep | add) <= max_atoms:
                keep |= add
                frontier = True
                break
        if rng.random() < 0.15:
            break
    em = Chem.RWMol(mol)
    Chem.Kekulize(em, clearAromaticFlags=True)
    for idx in sorted(set(range(mol.GetNumAtoms())) - keep, reverse=True):
        em.RemoveAtom(idx)
    frag = em.GetMol()
    for a in frag.GetAtoms():
        a.SetNoImplicit(False)
        a.SetNumExplicitHs(0)
    try:
        Chem.SanitizeMol(frag)
    except Exception:
        return None
    if any(a.GetSymbol() not in ALLOWED or a.GetFormalCharge() != 0 for a in frag.GetAtoms()):
        return None
    if frag.GetNumAtoms() < 2 or len(Chem.GetMolFrags(frag)) != 1:
        return None
    return Chem.MolToSmiles(frag)


def main():
    moses = read_moses(sys.argv[1])
    rng = random.Random(20240917)
    sample = rng.sample(moses, 2000)
    out = "tests/data/"
    with open(out + "moses_sample.smi", "w") as fh:
        fh.write("# 2,000 molecules sampled from the MOSES training split\n")
        fh.writelines(s + "\n" for s in sample)

    small, seen = [], set()
    pool = rng.sample(moses, 20000)
    for smi in pool:
        mol = Chem.MolFromSmiles(smi)
        for _ in range(3):
            s = carve(mol, rng)
            if s and s not in seen:
                seen.add(s)
                small.append(s)
        if len(small) >= 1000:
            break
    small = small[:1000]
    with open(out + "qm9_like.smi", "w") as fh:
        fh.write("# 1,000 small molecules (<=9 heavy atoms, C/N/O/F) carved from MOSES molecules\n")
        fh.writelines(s + "\n" for s in small)
    for n in (32, 10):
        with open(out + f"fixture{n}.smi", "w") as fh:
            fh.writelines(s + "\n" for s in small[:n])


if __name__ == "__main__":
    main()
