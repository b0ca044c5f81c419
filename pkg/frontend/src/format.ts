/** Small display helpers. */

export function formatPrice(minorUnits: number, currency: string): string {
  return `${(minorUnits / 100).toFixed(2)} ${currency}`;
}

export function shortFingerprint(fp: string): string {
  return `${fp.slice(0, 12)}…`;
}

export function formatTimestamp(unixSeconds: number): string {
  return new Date(unixSeconds * 1000).toLocaleString();
}

export function relativeExpiry(expiresAt: number, now: number = Date.now() / 1000): string {
  const left = expiresAt - now;
  if (left <= 0) {
    return "expired";
  }
  const days = Math.floor(left / 86400);
  if (days >= 1) {
    return `${days}d left`;
  }
  const hours = Math.floor(left / 3600);
  if (hours >= 1) {
    return `${hours}h left`;
  }
  return `${Math.max(1, Math.floor(left / 60))}m left`;
}
