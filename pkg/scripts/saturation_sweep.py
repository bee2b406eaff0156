"""E_oF bound versus d for uniform visibilities; saturation for V < 1."""
import sys

import numpy as np

from entcert.engine import sweep

VIS = (1.0, 0.999, 0.995, 0.99, 0.98)

if __name__ == "__main__":
    d_max = int(sys.argv[1]) if len(sys.argv) > 1 else 30
    rows = sweep(VIS, d_max)
    print("V,d,eof_bits")
    for v, d, e in rows:
        print(f"{v},{d},{e:.6f}")
    for v in VIS:
        e = np.array([r[2] for r in rows if r[0] == v])
        k = int(np.argmax(e))
        print(f"# V={v}: max {e[k]:.4f} ebits first reached at d={k + 2}", file=sys.stderr)
