/** Thin interpreter from draw commands to a 2D canvas context. */

import type { DrawCommand } from "./scene.js";

export function paint(ctx: CanvasRenderingContext2D, commands: DrawCommand[]): void {
  for (const cmd of commands) {
    switch (cmd.op) {
      case "clear":
        ctx.fillStyle = cmd.color;
        ctx.fillRect(0, 0, ctx.canvas.width, ctx.canvas.height);
        break;
      case "rect":
        if (cmd.fill !== undefined) {
          ctx.fillStyle = cmd.fill;
          ctx.fillRect(cmd.x, cmd.y, cmd.w, cmd.h);
        }
        if (cmd.stroke !== undefined) {
          ctx.strokeStyle = cmd.stroke;
          ctx.lineWidth = 1;
          ctx.strokeRect(cmd.x, cmd.y, cmd.w, cmd.h);
        }
        break;
      case "line":
        ctx.strokeStyle = cmd.color;
        ctx.lineWidth = cmd.width;
        ctx.setLineDash(cmd.dash ?? []);
        ctx.beginPath();
        ctx.moveTo(cmd.x1, cmd.y1);
        ctx.lineTo(cmd.x2, cmd.y2);
        ctx.stroke();
        ctx.setLineDash([]);
        break;
      case "circle":
        ctx.beginPath();
        ctx.arc(cmd.x, cmd.y, cmd.r, 0, 2 * Math.PI);
        if (cmd.fill !== undefined) {
          ctx.fillStyle = cmd.fill;
          ctx.fill();
        }
        if (cmd.stroke !== undefined) {
          ctx.strokeStyle = cmd.stroke;
          ctx.lineWidth = cmd.width ?? 1;
          ctx.stroke();
        }
        break;
      case "arrow": {
        const rad = (cmd.angle * Math.PI) / 180;
        const tipX = cmd.x + Math.cos(rad) * cmd.length;
        const tipY = cmd.y + Math.sin(rad) * cmd.length;
        ctx.strokeStyle = cmd.color;
        ctx.fillStyle = cmd.color;
        ctx.lineWidth = cmd.width;
        ctx.beginPath();
        ctx.moveTo(cmd.x, cmd.y);
        ctx.lineTo(tipX, tipY);
        ctx.stroke();
        const head = 4 + cmd.width;
        ctx.beginPath();
        ctx.moveTo(tipX, tipY);
        ctx.lineTo(
          tipX - head * Math.cos(rad - 0.4),
          tipY - head * Math.sin(rad - 0.4),
        );
        ctx.lineTo(
          tipX - head * Math.cos(rad + 0.4),
          tipY - head * Math.sin(rad + 0.4),
        );
        ctx.closePath();
        ctx.fill();
        break;
      }
      case "text":
        ctx.fillStyle = cmd.color;
        ctx.font = `${cmd.size}px system-ui, sans-serif`;
        ctx.textAlign = cmd.align;
        ctx.fillText(cmd.text, cmd.x, cmd.y);
        break;
    }
  }
}
