import init, { receivedSpectrum, dopplerDemo, commDemo } from "./pkg/sbfd_web.js";

const $ = (id) => document.getElementById(id);

function plotLine(canvas, xs, ys) {
  const g = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  g.clearRect(0, 0, w, h);
  const finite = ys.filter(Number.isFinite);
  const hi = Math.max(...finite);
  const lo = Math.max(Math.min(...finite), hi - 80);
  const x0 = xs[0], x1 = xs[xs.length - 1];
  g.beginPath();
  xs.forEach((x, i) => {
    const y = Math.max(ys[i], lo);
    const px = ((x - x0) / (x1 - x0)) * w;
    const py = h - ((y - lo) / (hi - lo)) * (h - 20) - 10;
    i ? g.lineTo(px, py) : g.moveTo(px, py);
  });
  g.strokeStyle = "#1f5fa8";
  g.stroke();
  g.fillStyle = "#555";
  g.fillText(`${(x0 / 1e6).toFixed(1)} MHz`, 4, h - 4);
  g.fillText(`${(x1 / 1e6).toFixed(1)} MHz`, w - 60, h - 4);
  g.fillText(`${hi.toFixed(0)} dB`, 4, 12);
}

function plotPoints(canvas, iq) {
  const g = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  g.clearRect(0, 0, w, h);
  g.strokeStyle = "#ddd";
  g.beginPath();
  g.moveTo(w / 2, 0); g.lineTo(w / 2, h); g.moveTo(0, h / 2); g.lineTo(w, h / 2);
  g.stroke();
  const s = w / 4;
  g.fillStyle = "rgba(31, 95, 168, 0.4)";
  for (let k = 0; k < iq.length; k += 2) {
    g.fillRect(w / 2 + iq[k] * s - 1, h / 2 - iq[k + 1] * s - 1, 2, 2);
  }
}

function psd() {
  try {
    const s = receivedSpectrum($("psd-mode").value, Number($("psd-node").value), 16);
    plotLine($("psd-plot"), s.frequencies(), s.power_db());
  } catch (e) {
    alert(e);
  }
}

function doppler() {
  $("dop-out").textContent = "working...";
  setTimeout(() => {
    try {
      const d = dopplerDemo(Number($("dop-v").value), Number($("dop-snr").value));
      $("dop-out").textContent = d.detected
        ? `estimate ${d.estimate_mps.toFixed(3)} m/s, peak ${d.peak_snr_db.toFixed(1)} dB, bin ${d.resolution_mps.toFixed(3)} m/s`
        : `no mover found (peak ${d.peak_snr_db.toFixed(1)} dB)`;
    } catch (e) {
      $("dop-out").textContent = String(e);
    }
  }, 10);
}

function link() {
  const db = Number($("ber-snr").value);
  $("ber-db").textContent = db;
  const c = commDemo(db, 300);
  $("ber-out").textContent = `BER ${c.ber.toExponential(2)} over ${c.bits} bits`;
  plotPoints($("const-plot"), c.constellation());
}

await init();
$("psd-go").onclick = psd;
$("dop-go").onclick = doppler;
$("ber-snr").oninput = link;
psd();
link();
