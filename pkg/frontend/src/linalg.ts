/**
 * Minimal row-major matrix kernels over Float64Array, sized for encoder
 * forward passes (hundreds of rows, hidden widths in the hundreds).
 */

/** out[r x c] = a[r x k] @ b[k x c]; cache-friendly i-k-j loops. */
export function matmul(
  a: Float64Array, b: Float64Array, rows: number, inner: number, cols: number
): Float64Array {
  const out = new Float64Array(rows * cols);
  for (let i = 0; i < rows; i++) {
    const aRow = i * inner;
    const outRow = i * cols;
    for (let k = 0; k < inner; k++) {
      const scale = a[aRow + k];
      if (scale === 0) continue;
      const bRow = k * cols;
      for (let j = 0; j < cols; j++) {
        out[outRow + j] += scale * b[bRow + j];
      }
    }
  }
  return out;
}

/** In place: every row of m[rows x cols] += bias[cols]. */
export function addBias(m: Float64Array, bias: Float64Array | Float32Array, rows: number, cols: number): void {
  for (let i = 0; i < rows; i++) {
    const row = i * cols;
    for (let j = 0; j < cols; j++) m[row + j] += bias[j];
  }
}

/** In place row-wise softmax with max subtraction. */
export function softmaxRows(m: Float64Array, rows: number, cols: number): void {
  for (let i = 0; i < rows; i++) {
    const row = i * cols;
    let max = -Infinity;
    for (let j = 0; j < cols; j++) if (m[row + j] > max) max = m[row + j];
    let sum = 0;
    for (let j = 0; j < cols; j++) {
      const e = Math.exp(m[row + j] - max);
      m[row + j] = e;
      sum += e;
    }
    for (let j = 0; j < cols; j++) m[row + j] /= sum;
  }
}

/** In place layer normalization per row, with scale/shift. */
export function layerNormRows(
  m: Float64Array, rows: number, cols: number,
  gamma: Float32Array, beta: Float32Array, eps = 1e-12
): void {
  for (let i = 0; i < rows; i++) {
    const row = i * cols;
    let mean = 0;
    for (let j = 0; j < cols; j++) mean += m[row + j];
    mean /= cols;
    let variance = 0;
    for (let j = 0; j < cols; j++) {
      const centered = m[row + j] - mean;
      variance += centered * centered;
    }
    variance /= cols;
    const inv = 1.0 / Math.sqrt(variance + eps);
    for (let j = 0; j < cols; j++) {
      m[row + j] = (m[row + j] - mean) * inv * gamma[j] + beta[j];
    }
  }
}

/** In place GELU (tanh approximation). */
export function geluInPlace(m: Float64Array): void {
  const c = Math.sqrt(2.0 / Math.PI);
  for (let i = 0; i < m.length; i++) {
    const x = m[i];
    m[i] = 0.5 * x * (1.0 + Math.tanh(c * (x + 0.044715 * x * x * x)));
  }
}

/** In place elementwise addition: a += b. */
export function addInPlace(a: Float64Array, b: Float64Array): void {
  for (let i = 0; i < a.length; i++) a[i] += b[i];
}
