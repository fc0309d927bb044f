export const ADDRESS_KEY = "fmea-rag-address";
export const DEFAULT_ADDRESS = "http://127.0.0.1:8077";
export const MIN_K = 1;
export const MAX_K = 10;

export interface StringStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

export function validateAddress(value: string): string | null {
  const trimmed = value.trim().replace(/\/+$/, "");
  let url: URL;
  try {
    url = new URL(trimmed);
  } catch {
    return null;
  }
  if (url.protocol !== "http:" && url.protocol !== "https:") {
    return null;
  }
  return trimmed;
}

export function validateK(value: unknown): number | null {
  const k = typeof value === "number" ? value : Number(value);
  if (!Number.isInteger(k) || k < MIN_K || k > MAX_K) {
    return null;
  }
  return k;
}

export function loadAddress(store: StringStore): string {
  const saved = store.getItem(ADDRESS_KEY);
  if (saved !== null) {
    const valid = validateAddress(saved);
    if (valid !== null) {
      return valid;
    }
  }
  return DEFAULT_ADDRESS;
}

export function saveAddress(store: StringStore, address: string): void {
  store.setItem(ADDRESS_KEY, address);
}
