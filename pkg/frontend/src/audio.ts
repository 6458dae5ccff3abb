import { Feedback } from "./session.js";

// Feedback sounds from a bare oscillator: a high blip for a correct
// entry, a low one for a wrong entry or cancel, a two-note rise when the
// task completes and a long buzz when it times out. No-op wherever
// WebAudio is unavailable (tests, very old browsers).

type ToneStep = { freq: number; durS: number; gapS: number };

const TONES: Record<Feedback, ToneStep[]> = {
  correct: [{ freq: 880, durS: 0.1, gapS: 0 }],
  wrong: [{ freq: 220, durS: 0.18, gapS: 0 }],
  done: [
    { freq: 660, durS: 0.12, gapS: 0.04 },
    { freq: 990, durS: 0.2, gapS: 0 },
  ],
  failed: [{ freq: 150, durS: 0.5, gapS: 0 }],
};

type AudioContextCtor = new () => AudioContext;

function audioContextCtor(): AudioContextCtor | null {
  const g = globalThis as { AudioContext?: AudioContextCtor; webkitAudioContext?: AudioContextCtor };
  return g.AudioContext ?? g.webkitAudioContext ?? null;
}

export class Beeper {
  private ctx: AudioContext | null = null;

  play(kind: Feedback): void {
    if (this.ctx === null) {
      const Ctor = audioContextCtor();
      if (Ctor === null) return;
      this.ctx = new Ctor();
    }
    const ctx = this.ctx;
    if (ctx.state === "suspended") {
      void ctx.resume();
    }
    let at = ctx.currentTime;
    for (const step of TONES[kind]) {
      const osc = ctx.createOscillator();
      const gain = ctx.createGain();
      osc.type = "sine";
      osc.frequency.value = step.freq;
      gain.gain.setValueAtTime(0.0001, at);
      gain.gain.exponentialRampToValueAtTime(0.3, at + 0.01);
      gain.gain.exponentialRampToValueAtTime(0.0001, at + step.durS);
      osc.connect(gain).connect(ctx.destination);
      osc.start(at);
      osc.stop(at + step.durS + 0.01);
      at += step.durS + step.gapS;
    }
  }
}
