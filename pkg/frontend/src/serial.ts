// Day-count serials in the 1900 date system (serial 1 = 1900-01-01).
// Serial 60 would be the fictitious 1900-02-29; it does not exist, so
// serials from 61 on are offset by one against the raw day count.

const MS_PER_DAY = 86_400_000;
const EPOCH_UTC = Date.UTC(1900, 0, 1);
const CUTOVER_UTC = Date.UTC(1900, 2, 1);

const ISO_RE = /^(\d{4})-(\d{2})-(\d{2})$/;

/** Serial for an ISO date, or null when the text is not a real date >= 1900-01-01. */
export function isoToSerial(text: string): number | null {
  const m = ISO_RE.exec(text.trim());
  if (m === null) return null;
  const year = Number(m[1]);
  const month = Number(m[2]);
  const day = Number(m[3]);
  const utc = Date.UTC(year, month - 1, day);
  const probe = new Date(utc);
  if (
    probe.getUTCFullYear() !== year ||
    probe.getUTCMonth() !== month - 1 ||
    probe.getUTCDate() !== day
  ) {
    return null; // Date.UTC normalized an impossible day (e.g. 1900-02-29)
  }
  if (utc < EPOCH_UTC) return null;
  const days = Math.round((utc - EPOCH_UTC) / MS_PER_DAY);
  return utc < CUTOVER_UTC ? days + 1 : days + 2;
}

/** ISO text for a serial; null for the phantom serial 60 or anything < 1. */
export function serialToIso(serial: number): string | null {
  if (!Number.isInteger(serial) || serial < 1 || serial === 60) return null;
  const offset = serial < 60 ? serial - 1 : serial - 2;
  const date = new Date(EPOCH_UTC + offset * MS_PER_DAY);
  const y = date.getUTCFullYear().toString().padStart(4, "0");
  const m = (date.getUTCMonth() + 1).toString().padStart(2, "0");
  const d = date.getUTCDate().toString().padStart(2, "0");
  return `${y}-${m}-${d}`;
}
