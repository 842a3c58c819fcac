// UI strings in English and Bahasa Indonesia. The tool is meant for mixed
// research teams, so the interface language is a first-class toggle.

export type Locale = "en" | "id";

const STRINGS: Record<Locale, Record<string, string>> = {
  en: {
    "nav-capture": "capture-text",
    "nav-transcript": "transcript",
    "nav-gallery": "curation",
    "nav-dashboard": "evaluation",
    "choose-video": "Choose video (.webm / .mp4 only)",
    "start-minute": "start minute (0-59)",
    "start-second": "start second (0-59)",
    "end-minute": "end minute (0-59)",
    "end-second": "end second (0-59)",
    "chunk-length": "chunk length in sec (min 5, max 59)",
    "confidence-threshold": "confidence threshold for STT (0.0 - 1.0)",
    "search-term": "(optional) single search term",
    "key-file": "key for capture-text (.json)",
    "language-spoken": "language spoken in video segment",
    "capture-takes-time": "caveat: capture-text takes time",
    "view-video": "view-video",
    "capture-text": "capture-text",
    "release-data": "back to start - release data",
    "error-no-file": "choose a video file first",
    "error-file-type": "only .webm and .mp4 files are accepted",
    "error-time-range": "time fields must be whole numbers from 0 to 59",
    "error-window-order": "end time must come after start time",
    "error-chunk-len": "chunk length must be between 5 and 59 seconds",
    "error-threshold": "threshold must be between 0.0 and 1.0",
    "error-search-term": "use a single search term",
    "uploading": "uploading...",
    "transcribing": "transcribing...",
    "job-done": "done",
    "job-failed": "failed",
    "utterances": "utterances",
    "hits": "search hits",
    "promote-hit": "promote hit to label span",
    "pad-before": "pad before (s)",
    "pad-after": "pad after (s)",
    "label": "label",
    "exclude-selected": "exclude selected",
    "include-selected": "include selected",
    "deficient-warning": "below the minimum; collect more material",
    "kept": "kept",
    "select-dataset": "dataset",
    "upload-log": "upload prediction log (.jsonl)",
    "vote-selected": "vote across selected logs",
    "context-tag": "context tag",
    "rescore": "context subset report",
    "top1": "top-1 error %",
    "top3": "top-3 error %",
    "category": "category",
    "no-transcript": "no transcript yet; run capture-text first",
    "threshold-slider": "confidence threshold",
    "export-started": "release export started",
    "confidence": "confidence",
  },
  id: {
    "nav-capture": "ambil-teks",
    "nav-transcript": "transkrip",
    "nav-gallery": "kurasi",
    "nav-dashboard": "evaluasi",
    "choose-video": "Pilih video (hanya .webm / .mp4)",
    "start-minute": "menit mulai (0-59)",
    "start-second": "detik mulai (0-59)",
    "end-minute": "menit akhir (0-59)",
    "end-second": "detik akhir (0-59)",
    "chunk-length": "panjang potongan dalam detik (min 5, maks 59)",
    "confidence-threshold": "ambang kepercayaan STT (0.0 - 1.0)",
    "search-term": "(opsional) satu kata pencarian",
    "key-file": "kunci untuk ambil-teks (.json)",
    "language-spoken": "bahasa yang digunakan dalam video",
    "capture-takes-time": "catatan: ambil-teks membutuhkan waktu",
    "view-video": "lihat-video",
    "capture-text": "ambil-teks",
    "release-data": "kembali ke awal - rilis data",
    "error-no-file": "pilih berkas video terlebih dahulu",
    "error-file-type": "hanya berkas .webm dan .mp4 yang diterima",
    "error-time-range": "kolom waktu harus bilangan bulat 0 sampai 59",
    "error-window-order": "waktu akhir harus setelah waktu mulai",
    "error-chunk-len": "panjang potongan harus antara 5 dan 59 detik",
    "error-threshold": "ambang harus antara 0.0 dan 1.0",
    "error-search-term": "gunakan satu kata pencarian saja",
    "uploading": "mengunggah...",
    "transcribing": "menyalin...",
    "job-done": "selesai",
    "job-failed": "gagal",
    "utterances": "ujaran",
    "hits": "hasil pencarian",
    "promote-hit": "jadikan rentang label",
    "pad-before": "jeda sebelum (dtk)",
    "pad-after": "jeda sesudah (dtk)",
    "label": "label",
    "exclude-selected": "keluarkan pilihan",
    "include-selected": "masukkan pilihan",
    "deficient-warning": "di bawah minimum; kumpulkan materi lagi",
    "kept": "terpakai",
    "select-dataset": "dataset",
    "upload-log": "unggah log prediksi (.jsonl)",
    "vote-selected": "voting antar log terpilih",
    "context-tag": "tag konteks",
    "rescore": "laporan subset konteks",
    "top1": "galat top-1 %",
    "top3": "galat top-3 %",
    "category": "kategori",
    "no-transcript": "belum ada transkrip; jalankan ambil-teks dulu",
    "threshold-slider": "ambang kepercayaan",
    "export-started": "ekspor rilis dimulai",
    "confidence": "kepercayaan",
  },
};

// The spoken-language choices offered by the capture-text form.
export const SPOKEN_LANGUAGES: Array<{ tag: string; name: string }> = [
  { tag: "id-ID", name: "Bahasa Indonesia" },
  { tag: "ban", name: "Basa Bali" },
  { tag: "en-US", name: "English" },
];

let current: Locale = "en";

export function setLocale(locale: Locale): void {
  current = locale;
}

export function getLocale(): Locale {
  return current;
}

export function t(key: string): string {
  return STRINGS[current][key] ?? STRINGS.en[key] ?? key;
}
