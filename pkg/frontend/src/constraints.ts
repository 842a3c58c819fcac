// Capture-text form constraints. These mirror the server's validation so the
// form can flag problems inline; the server enforces them regardless.

export const VIDEO_EXTENSIONS = [".webm", ".mp4"];
export const KEY_FILE_EXTENSIONS = [".json"];

export const TIME_FIELD = { min: 0, max: 59 };
export const CHUNK_LEN = { min: 5, max: 59 };
export const THRESHOLD = { min: 0.0, max: 1.0, step: 0.05 };

export interface CaptureTextValues {
  filename: string;
  startMin: number;
  startSec: number;
  endMin: number;
  endSec: number;
  chunkLenS: number;
  threshold: number;
  searchTerm: string;
  language: string;
}

export function hasAllowedExtension(name: string, allowed: string[]): boolean {
  const lower = name.toLowerCase();
  return allowed.some((ext) => lower.endsWith(ext));
}

export function isVideoFilename(name: string): boolean {
  return hasAllowedExtension(name, VIDEO_EXTENSIONS);
}

/** Error keys for every constraint the form currently violates. */
export function validateCaptureText(v: CaptureTextValues): string[] {
  const errors: string[] = [];
  if (!v.filename) {
    errors.push("error-no-file");
  } else if (!isVideoFilename(v.filename)) {
    errors.push("error-file-type");
  }
  for (const t of [v.startMin, v.startSec, v.endMin, v.endSec]) {
    if (!Number.isInteger(t) || t < TIME_FIELD.min || t > TIME_FIELD.max) {
      errors.push("error-time-range");
      break;
    }
  }
  const start = v.startMin * 60 + v.startSec;
  const end = v.endMin * 60 + v.endSec;
  if (!(start === 0 && end === 0) && end <= start) {
    errors.push("error-window-order");
  }
  if (!(v.chunkLenS >= CHUNK_LEN.min && v.chunkLenS <= CHUNK_LEN.max)) {
    errors.push("error-chunk-len");
  }
  if (!(v.threshold >= THRESHOLD.min && v.threshold <= THRESHOLD.max)) {
    errors.push("error-threshold");
  }
  if (v.searchTerm.trim().split(/\s+/).filter(Boolean).length > 1) {
    errors.push("error-search-term");
  }
  return errors;
}
