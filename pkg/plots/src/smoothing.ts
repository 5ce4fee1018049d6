/** Exponential smoothing y'_t = a*y_t + (1-a)*y'_{t-1}, seeded at y'_0 = y_0. */
export function ewmSmooth(values: readonly number[], alpha: number): number[] {
  if (!(alpha > 0) || alpha > 1) {
    throw new Error(`alpha must lie in (0, 1], got ${alpha}`);
  }
  if (values.length === 0) {
    return [];
  }
  const out = new Array<number>(values.length);
  out[0] = values[0];
  for (let i = 1; i < values.length; i++) {
    out[i] = alpha * values[i] + (1 - alpha) * out[i - 1];
  }
  return out;
}
