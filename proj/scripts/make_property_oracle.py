"""Freeze reference W/logP/TPSA values for the fixture corpora (needs rdkit)."""
import sys
from pathlib import Path

from rdkit import Chem
from rdkit.Chem import Crippen, Descriptors, rdMolDescriptors

data = Path(__file__).resolve().parent.parent / "tests" / "data"


def read(name):
    for line in open(data / name):
        line = line.strip()
        if line and not line.startswith("#"):
            yield line.split()[0]


smiles = list(read("moses_sample.smi"))[:500] + list(read("qm9_like.smi"))[:500]
with open(data / "properties_ref.csv", "w") as out:
    out.write("smiles,W,logP,TPSA\n")
    for s in smiles:
        m = Chem.MolFromSmiles(s)
        if m is None:
            sys.exit(f"unparseable: {s}")
        out.write(f"{s},{Descriptors.MolWt(m):.6f},{Crippen.MolLogP(m):.6f},{rdMolDescriptors.CalcTPSA(m):.6f}\n")
