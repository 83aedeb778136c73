import { ScoreClient } from './api.js';
import { App } from './ui.js';

const params = new URLSearchParams(window.location.search);
// served by the scoring service itself -> same origin; file:// -> default port
const fallback = window.location.protocol.startsWith('http')
  ? window.location.origin
  : 'http://127.0.0.1:8099';
const base = params.get('service') ?? fallback;

const root = document.getElementById('app');
if (!root) throw new Error('missing #app element');

const client = new ScoreClient(base);
const app = new App(root, client);
app.start();

void client.health().then((ok) => {
  if (!ok) {
    const status = document.getElementById('status');
    if (status) {
      status.textContent =
        `scoring service not reachable at ${base} - start it with: amprint serve --port 8099`;
    }
  }
});
