#pragma once

#include <string>
#include <string_view>

#include "uxpipe/trace.hpp"

namespace uxpipe::prompts {

inline constexpr std::string_view kDatePlaceholder = "{DATE}";

inline constexpr std::string_view kUsabilityTestGoal =
    "Please generate the next move according to the UI screenshot, instruction and previous "
    "actions.\n"
    "\n"
    "Instruction: \n"
    "Conduct a usability test of this website.\n"
    "\n"
    "You have a budget of 50 actions you can perform on the website. Use it as efficiently as "
    "possible to test all important flows for the website and make the most accurate assessment "
    "of usability.\n"
    "\n"
    "First, list the most important user goals for this site. Then, work through at least three "
    "distinct key flows that cover those goals, one by one. Use realistic placeholder data if "
    "you need to fill any fields. \n"
    "\n"
    "If you are using a date picker widget in a booking flow, remember that the target date "
    "usually must be in the future. Today's date is {DATE}. If given the option, you should try "
    "to use a date picker instead of manually entering the date.The date picker control is "
    "usually located immediately to the right of the date field.\n"
    "\n"
    "If you encounter errors, try your best to complete the flow but if you cannot complete it, "
    "move onto another flow. \n"
    "\n"
    "Do not finish the trace until you have worked through the key flows you listed.";

inline constexpr std::string_view kScoringPrompt =
    "Rate the website usability from 0 to 100.\n"
    "The score should represent the probability that an average user can successfully use the "
    "website's most important flows.\n"
    "You are testing a real website - the site you are testing is NOT a mock/demo/educational "
    "app.\n"
    "Review the assistant thoughts from each interaction step and create a list of usability "
    "problems.\n"
    "Each observation you make must reference a direct quote from the thought history, and you "
    "must rate it as a major or minor issue.\n"
    "Pay special attention to broken navigation, failed page loads, non-responsive clicks, "
    "confusing flows, and unfinished core flows.\n"
    "For example, look for thoughts that say \"page appears to be stuck or not loading "
    "properly,\" \"I need to wait briefly to ensure the page fully load\", and \"I need to wait "
    "for the page to load.\"\n"
    "If this appears multiple times, that is a red flag because the implementation might not "
    "contain that functionality and only appears to be loading.\n"
    "If the thoughts contain \"haven't successfully completed\" that is also a red flag.\n"
    "End with exactly one final line: Action: score(<number from 0 to 100>).";

// Neutral default; deployments substitute their own grounding text.
inline constexpr std::string_view kGroundingInstruction =
    "You are operating a web browser through screenshots. The most recent screenshot is the "
    "last image. Coordinates are integer pixels measured from the top-left corner of the "
    "screenshot. Think step by step, then end your reply with exactly one line of the form "
    "`Action: <action>` using one of:\n"
    "click(x, y)\n"
    "type(\"text\")\n"
    "scroll(up|down, steps)\n"
    "key(name+name)\n"
    "wait(ms)\n"
    "stop()";

inline constexpr std::string_view kReprompt =
    "Your previous reply did not contain a valid action. Reply again and end with exactly one "
    "line of the form `Action: <action>`.";

inline std::string substitute_date(std::string_view tmpl, std::string_view date) {
  std::string out(tmpl);
  for (auto pos = out.find(kDatePlaceholder); pos != std::string::npos;
       pos = out.find(kDatePlaceholder, pos + date.size()))
    out.replace(pos, kDatePlaceholder.size(), date);
  return out;
}

// User-turn text for a navigation step; the window images follow it.
inline std::string step_text(std::string_view goal, const SessionHistory& history) {
  std::string s(goal);
  s += "\n\nPrevious actions:\n";
  s += history.to_text();
  return s;
}

// User-turn text for the scoring turn, appended after the navigation session.
inline std::string assessment_text(std::string_view goal, const SessionHistory& history,
                                   std::string_view scoring_prompt) {
  std::string s(goal);
  s += "\n\nSession history:\n";
  s += history.to_text(2);
  s += "\n\n";
  s += scoring_prompt;
  return s;
}

}  // namespace uxpipe::prompts
