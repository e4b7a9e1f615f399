#pragma once

#include <optional>
#include <string>
#include <vector>

namespace stub {

struct VerdictCase {
  std::string raw;
  std::size_t expected;
  std::optional<std::vector<bool>> verdicts;  // nullopt: must be rejected
};

/// Judge outputs collected to cover the shapes seen in practice.
inline const std::vector<VerdictCase>& verdict_cases() {
  static const std::vector<VerdictCase> cases = {
      {"yes", 1, std::vector<bool>{true}},
      {"No.", 1, std::vector<bool>{false}},
      {"YES", 1, std::vector<bool>{true}},
      {"  yes  \n", 1, std::vector<bool>{true}},
      {"(yes)", 1, std::vector<bool>{true}},
      {"Yes, the response shows that characteristic.", 1, std::vector<bool>{true}},
      {"1. yes\n2. no\n3. yes", 3, std::vector<bool>{true, false, true}},
      {"Assistant 1: Yes\nAssistant 2: No", 2, std::vector<bool>{true, false}},
      {"yes, no, no, yes", 4, std::vector<bool>{true, false, false, true}},
      {"Response 1 - yes; Response 2 - yes", 2, std::vector<bool>{true, true}},
      {"**Assistant 1:** no\n**Assistant 2:** yes", 2, std::vector<bool>{false, true}},
      {"- yes\n- no", 2, std::vector<bool>{true, false}},
      {"Yes\r\nNo\r\n", 2, std::vector<bool>{true, false}},
      {"Assistant 1: yes.\nAssistant 2: no.\nAssistant 3: no.\nAssistant 4: yes.\nAssistant 5: yes.\n"
       "Assistant 6: no.\nAssistant 7: yes.\nAssistant 8: no.",
       8, std::vector<bool>{true, false, false, true, true, false, true, false}},
      {"Yes.", 2, std::nullopt},
      {"maybe", 1, std::nullopt},
      {"", 1, std::nullopt},
      {"yesterday I noted nothing", 1, std::nullopt},
      {"yes no", 1, std::nullopt},
      {"I would say yes. No doubt about it.", 1, std::nullopt},
  };
  return cases;
}

}  // namespace stub
