/** GLSL sources.
 *
 * The fragment silhouette uses the trigonometric form of the tangent
 * point construction: the polar line of the camera meets the ellipse
 * (w cos t, sin t) where R cos(t - phi0) = 1, R and phi0 being the
 * polar coordinates of (cx / w, cy).  It is algebraically the same two
 * points the CPU side derives from the degenerate-conic split, and
 * shaderPosition in silhouette twin-tests the exact expression below.
 */

export const SILHOUETTE_CHUNK = `
float silhouettePos(vec2 p, vec2 c, float w) {
  vec2 cw = vec2(c.x / w, c.y);
  float R2 = dot(cw, cw);
  if (R2 <= 1.0) return 0.0;
  float R = sqrt(R2);
  float phi0 = atan(cw.y, cw.x);
  float dth = acos(clamp(1.0 / R, -1.0, 1.0));
  vec2 t1 = vec2(w * cos(phi0 - dth), sin(phi0 - dth));
  vec2 t2 = vec2(w * cos(phi0 + dth), sin(phi0 + dth));
  vec2 l = vec2(c.x / (w * w), c.y);
  vec2 d = p - c;
  float denom = dot(l, d);
  float lim = 1e-6 * (abs(l.x) + abs(l.y)) * length(d);
  if (abs(denom) <= lim) return 1.0;
  float sl = (1.0 - dot(l, c)) / denom;
  vec2 hit = c + sl * d;
  float s = distance(hit, t1) / distance(t2, t1);
  return min(abs(2.0 * s - 1.0), 1.0);
}
`;

export const TUBE_VERTEX = `
attribute vec3 aPosition;
attribute vec3 aNormal;
attribute vec3 aColor;
attribute vec3 aCenter;
attribute vec3 aFrameN;
attribute vec3 aFrameB;
attribute float aCap;

uniform mat4 uView;
uniform mat4 uProj;

varying vec3 vWorld;
varying vec3 vNormal;
varying vec3 vColor;
varying vec3 vCenter;
varying vec3 vFrameN;
varying vec3 vFrameB;
varying float vCap;
varying float vDepth;

void main() {
  vec4 viewPos = uView * vec4(aPosition, 1.0);
  gl_Position = uProj * viewPos;
  vWorld = aPosition;
  vNormal = aNormal;
  vColor = aColor;
  vCenter = aCenter;
  vFrameN = aFrameN;
  vFrameB = aFrameB;
  vCap = aCap;
  vDepth = -viewPos.z;
}
`;

function tubeFragment(selftest: boolean): string {
  return `
precision highp float;

uniform vec3 uCameraPos;
uniform float uRadius;
uniform float uWidth;
uniform float uOutline;
uniform float uDepthMin;
uniform float uDepthMax;
uniform float uCue;

varying vec3 vWorld;
varying vec3 vNormal;
varying vec3 vColor;
varying vec3 vCenter;
varying vec3 vFrameN;
varying vec3 vFrameB;
varying float vCap;
varying float vDepth;

${SILHOUETTE_CHUNK}

vec2 toSection(vec3 p) {
  vec3 d = p - vCenter;
  return vec2(dot(d, vFrameN), dot(d, vFrameB)) / uRadius;
}

void main() {
  float pos = 0.0;
  if (vCap < 0.5) {
    pos = silhouettePos(toSection(vWorld), toSection(uCameraPos), uWidth);
  }
${
    selftest
      ? `  gl_FragColor = vec4(floor(pos * 255.0) / 255.0, fract(pos * 255.0), vCap, 1.0);`
      : `  vec3 n = normalize(vNormal);
  vec3 viewDir = normalize(uCameraPos - vWorld);
  float shade = 0.35 + 0.65 * abs(dot(n, viewDir));
  vec3 col = vColor * shade;
  if (pos > uOutline) col = vec3(0.0);
  float t = clamp((vDepth - uDepthMin) / max(uDepthMax - uDepthMin, 1e-6), 0.0, 1.0);
  float luma = dot(col, vec3(0.299, 0.587, 0.114));
  col = mix(col, vec3(luma), uCue * t);
  gl_FragColor = vec4(col, 1.0);`
  }
}
`;
}

export const TUBE_FRAGMENT = tubeFragment(false);
export const TUBE_FRAGMENT_SELFTEST = tubeFragment(true);

export const LINE_VERTEX = `
attribute vec3 aPosition;
attribute vec3 aColor;

uniform mat4 uView;
uniform mat4 uProj;

varying vec3 vColor;
varying float vDepth;

void main() {
  vec4 viewPos = uView * vec4(aPosition, 1.0);
  gl_Position = uProj * viewPos;
  vColor = aColor;
  vDepth = -viewPos.z;
}
`;

export const LINE_FRAGMENT = `
precision highp float;

uniform float uDepthMin;
uniform float uDepthMax;
uniform float uCue;

varying vec3 vColor;
varying float vDepth;

void main() {
  float t = clamp((vDepth - uDepthMin) / max(uDepthMax - uDepthMin, 1e-6), 0.0, 1.0);
  float luma = dot(vColor, vec3(0.299, 0.587, 0.114));
  gl_FragColor = vec4(mix(vColor, vec3(luma), uCue * t), 1.0);
}
`;

export const HULL_VERTEX = `
attribute vec3 aPosition;
attribute vec3 aNormal;

uniform mat4 uView;
uniform mat4 uProj;

varying vec3 vWorld;
varying vec3 vNormal;

void main() {
  gl_Position = uProj * uView * vec4(aPosition, 1.0);
  vWorld = aPosition;
  vNormal = aNormal;
}
`;

// the hull fades out where it faces the camera head on: opacity is
// 1 - cos(angle between surface normal and view direction)
export const HULL_FRAGMENT = `
precision highp float;

uniform vec3 uCameraPos;
uniform vec3 uHullColor;
uniform float uHullOpacity;

varying vec3 vWorld;
varying vec3 vNormal;

void main() {
  vec3 viewDir = normalize(uCameraPos - vWorld);
  float facing = abs(dot(normalize(vNormal), viewDir));
  gl_FragColor = vec4(uHullColor, uHullOpacity * (1.0 - facing));
}
`;
