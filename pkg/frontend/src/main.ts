/**
 * Browser entry point.
 *
 * Mounts the studio against the lexcraft service; the service origin comes
 * from the `?api=` query parameter and defaults to the page's own origin
 * (the expected setup is the static bundle served next to the API or
 * behind the same proxy).
 */

import { StudioApp } from './ui.js';

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const baseUrl = params.get('api') ?? window.location.origin;
  const root = document.getElementById('studio');
  if (!root) {
    throw new Error('missing #studio mount node');
  }
  try {
    await StudioApp.mount(root, baseUrl);
  } catch (error) {
    root.textContent = `Failed to reach the service at ${baseUrl}: ${String(error)}`;
  }
}

void boot();
