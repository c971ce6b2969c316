#pragma once

// Flat-rectangle renderer for simulated screens. Pure function of
// (site, node, scroll offset, field state), so renders are bit-identical
// everywhere.

#include <map>
#include <optional>
#include <string>

#include "uxpipe/error.hpp"
#include "uxpipe/image.hpp"
#include "uxpipe/sim/font.hpp"
#include "uxpipe/sim/site.hpp"

namespace uxpipe::sim {

// Transient per-screen input state.
struct ViewState {
  std::map<int, std::string> values;  // field widget id -> typed text
  std::optional<int> focused;

  friend bool operator==(const ViewState&, const ViewState&) = default;
};

inline constexpr int kTopBarHeight = 96;

namespace render_detail {

inline constexpr Rgb kBackground{248, 248, 250};
inline constexpr Rgb kInk{30, 30, 40};
inline constexpr Rgb kMuted{130, 130, 140};
inline constexpr Rgb kWhite{255, 255, 255};
inline constexpr Rgb kPanel{232, 234, 240};
inline constexpr Rgb kDanger{196, 36, 36};

inline void frame(Screenshot& img, int x, int y, int w, int h, int t, Rgb c) {
  img.fill_rect(x, y, w, t, c);
  img.fill_rect(x, y + h - t, w, t, c);
  img.fill_rect(x, y, t, h, c);
  img.fill_rect(x + w - t, y, t, h, c);
}

inline void centered_text(Screenshot& img, const Rect& r, int dy, const std::string& s, int scale, Rgb c) {
  const int tw = text_width(s, scale);
  draw_text(img, r.x + (r.w - tw) / 2, r.y + dy + (r.h - kGlyphHeight * scale) / 2, s, scale, c);
}

inline Rgb mix(Rgb a, Rgb b, int wa) {  // wa in [0, 8]
  const auto m = [&](int x, int y) { return static_cast<std::uint8_t>((x * wa + y * (8 - wa)) / 8); };
  return {m(a.r, b.r), m(a.g, b.g), m(a.b, b.b)};
}

// 4x3 tile mosaic; bit (row * 4 + col) of the code picks dark or light.
inline void picture(Screenshot& img, const Picture& p, int dy, Rgb accent) {
  if (p.rect.w <= 0 || p.rect.h <= 0) return;
  const Rgb dark = mix(accent, Rgb{20, 20, 30}, 3);
  const Rgb light = mix(accent, Rgb{235, 235, 240}, 1);
  for (int row = 0; row < 3; ++row)
    for (int col = 0; col < 4; ++col) {
      const int x0 = p.rect.x + p.rect.w * col / 4, x1 = p.rect.x + p.rect.w * (col + 1) / 4;
      const int y0 = p.rect.y + p.rect.h * row / 3, y1 = p.rect.y + p.rect.h * (row + 1) / 3;
      const bool on = (p.code >> (row * 4 + col)) & 1;
      img.fill_rect(x0, y0 + dy, x1 - x0, y1 - y0, on ? dark : light);
    }
  frame(img, p.rect.x, p.rect.y + dy, p.rect.w, p.rect.h, 2, kMuted);
}

inline void widget(Screenshot& img, const Widget& w, int dy, Rgb accent, const ViewState& view) {
  Rect r = w.rect;
  r.y += dy;
  switch (w.kind) {
    case WidgetKind::button: {
      const Rgb fill = w.destructive ? kDanger : accent;
      img.fill_rect(r.x, r.y, r.w, r.h, fill);
      const int scale = r.h >= 60 ? 3 : 2;
      centered_text(img, r, 0, w.label, scale, kWhite);
      break;
    }
    case WidgetKind::link:
      if (w.rect.y < kTopBarHeight) {
        centered_text(img, r, 0, w.label, 3, kWhite);
      } else {
        img.fill_rect(r.x, r.y, r.w, r.h, kPanel);
        frame(img, r.x, r.y, r.w, r.h, 3, accent);
        centered_text(img, r, 0, w.label, r.h >= 120 ? 4 : 3, kInk);
      }
      break;
    case WidgetKind::field: {
      const bool focused = view.focused == w.id;
      img.fill_rect(r.x, r.y, r.w, r.h, kWhite);
      frame(img, r.x, r.y, r.w, r.h, focused ? 4 : 2, focused ? accent : kMuted);
      const auto it = view.values.find(w.id);
      const bool filled = it != view.values.end() && !it->second.empty();
      draw_text(img, r.x + 16, r.y + (r.h - kGlyphHeight * 3) / 2, filled ? it->second : w.label, 3,
                filled ? kInk : kMuted);
      break;
    }
    case WidgetKind::list_item:
      img.fill_rect(r.x, r.y, r.w, r.h, kPanel);
      frame(img, r.x, r.y, r.w, r.h, 2, kMuted);
      img.fill_rect(r.x + 16, r.y + 16, r.h - 32, r.h - 32, mix(accent, kWhite, 4));
      draw_text(img, r.x + r.h + 8, r.y + (r.h - kGlyphHeight * 4) / 2, w.label, 4, kInk);
      break;
  }
}

}  // namespace render_detail

inline int max_scroll(const Node& n) { return std::max(0, n.page_height - kViewportHeight); }

inline Screenshot render(const SimSite& site, int node_id, int scroll = 0, const ViewState& view = {}) {
  using namespace render_detail;
  const auto& n = site.node(node_id);
  if (scroll < 0 || scroll > max_scroll(n))
    throw DataError("scroll offset " + std::to_string(scroll) + " outside page of node " + n.name);
  const int dy = -scroll;

  Screenshot img(kViewportWidth, kViewportHeight, kBackground);

  img.fill_rect(0, dy, kViewportWidth, kTopBarHeight, site.accent);
  draw_text(img, 48, dy + 27, site.brand, 6, kWhite);

  draw_text(img, 48, dy + 196, n.title, 6, kInk);
  const int text_x = n.role == NodeRole::detail ? 1000 : 48;
  const int text_y = n.role == NodeRole::detail ? 300 : 258;
  for (std::size_t i = 0; i < n.text.size(); ++i)
    draw_text(img, text_x, dy + text_y + static_cast<int>(i) * 40, n.text[i], 3, kInk);

  for (const auto& p : n.pictures) picture(img, p, dy, site.accent);

  if (n.role == NodeRole::home) {
    draw_text(img, 48, dy + 1000, "Popular right now", 5, kInk);
    for (int i = 0; i < 4; ++i)
      img.fill_rect(48 + i * 462, dy + 1080, 438, 260, mix(site.accent, kWhite, 2 + 2 * (i % 2)));
    img.fill_rect(0, dy + 1400, kViewportWidth, 300, Rgb{40, 40, 50});
    draw_text(img, 48, dy + 1460, "About us   Help   Careers   Privacy", 3, kWhite);
  }
  if (n.role == NodeRole::confirm) frame(img, 320, dy + 280, 1100, 460, 4, kInk);

  for (const auto& w : n.widgets) widget(img, w, dy, site.accent, view);
  return img;
}

}  // namespace uxpipe::sim
