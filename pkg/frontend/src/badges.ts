/**
 * Diagnostics-to-badge mapping.
 *
 * The compiler reports diagnostics as {code, message, ids}; the panel
 * renders each one as a badge pinned to every instance it names. Codes
 * starting with E are errors (red), W are warnings (amber). Diagnostics
 * naming no instance (for example an empty-panel error) become one
 * panel-level badge.
 */

import type { Diagnostic } from './types.js';

export type BadgeSeverity = 'error' | 'warning';

export interface Badge {
  /** Instance the badge is pinned to, or null for a panel-level badge. */
  instanceId: string | null;
  code: string;
  severity: BadgeSeverity;
  message: string;
}

export function severityOf(code: string): BadgeSeverity {
  return code.startsWith('E') ? 'error' : 'warning';
}

export function diagnosticsToBadges(diagnostics: Diagnostic[]): Badge[] {
  const badges: Badge[] = [];
  for (const diag of diagnostics) {
    const severity = severityOf(diag.code);
    if (diag.ids.length === 0) {
      badges.push({ instanceId: null, code: diag.code, severity, message: diag.message });
      continue;
    }
    for (const id of diag.ids) {
      badges.push({ instanceId: id, code: diag.code, severity, message: diag.message });
    }
  }
  return badges;
}

/** Badges for one instance, errors first, stable by code. */
export function badgesFor(badges: Badge[], instanceId: string): Badge[] {
  return badges
    .filter((badge) => badge.instanceId === instanceId)
    .sort((a, b) =>
      a.severity === b.severity ? a.code.localeCompare(b.code) : a.severity === 'error' ? -1 : 1,
    );
}
