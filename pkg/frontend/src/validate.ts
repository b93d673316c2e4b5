/** Client-side input checks, kept to exactly the bounds the API enforces so
 * a request that passes here can only fail server-side on genuine faults. */

export interface FieldError {
  field: string;
  message: string;
}

export function clamp01(v: number): number {
  if (Number.isNaN(v)) return 0;
  return Math.min(1, Math.max(0, v));
}

export function validateConditions(values: number[]): FieldError | null {
  if (values.length === 0) {
    return { field: "condition", message: "no agents to condition" };
  }
  for (const v of values) {
    if (!Number.isFinite(v)) {
      return { field: "condition", message: "condition values must be finite" };
    }
    if (v < 0 || v > 1) {
      return { field: "condition", message: "condition values must lie in [0, 1]" };
    }
  }
  return null;
}

export function validateK(k: number): FieldError | null {
  if (!Number.isInteger(k) || k < 1) {
    return { field: "k", message: "k must be an integer of at least 1" };
  }
  return null;
}

export function validateSeed(seed: number): FieldError | null {
  if (!Number.isInteger(seed)) {
    return { field: "seed", message: "seed must be an integer" };
  }
  return null;
}

export function firstError(
  conditions: number[],
  k: number,
  seed: number,
): FieldError | null {
  return validateConditions(conditions) ?? validateK(k) ?? validateSeed(seed);
}
