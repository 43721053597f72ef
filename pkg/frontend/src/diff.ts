export interface DiffToken {
  text: string;
  kind: "same" | "removed" | "added";
}

/**
 * Word-level diff via longest common subsequence over whitespace tokens.
 * Removed tokens come from `before`, added ones from `after`; `same`
 * tokens appear in both.
 */
export function wordDiff(before: string, after: string): DiffToken[] {
  const a = before.split(/\s+/).filter(Boolean);
  const b = after.split(/\s+/).filter(Boolean);
  const n = a.length;
  const m = b.length;
  // lcs[i][j] = LCS length of a[i:], b[j:]
  const lcs: number[][] = Array.from({ length: n + 1 }, () => new Array(m + 1).fill(0));
  for (let i = n - 1; i >= 0; i--) {
    for (let j = m - 1; j >= 0; j--) {
      lcs[i][j] =
        a[i] === b[j] ? lcs[i + 1][j + 1] + 1 : Math.max(lcs[i + 1][j], lcs[i][j + 1]);
    }
  }
  const out: DiffToken[] = [];
  let i = 0;
  let j = 0;
  while (i < n && j < m) {
    if (a[i] === b[j]) {
      out.push({ text: a[i], kind: "same" });
      i++;
      j++;
    } else if (lcs[i + 1][j] >= lcs[i][j + 1]) {
      out.push({ text: a[i], kind: "removed" });
      i++;
    } else {
      out.push({ text: b[j], kind: "added" });
      j++;
    }
  }
  while (i < n) out.push({ text: a[i++], kind: "removed" });
  while (j < m) out.push({ text: b[j++], kind: "added" });
  return out;
}
