"""Session prompt templates for the multi-session planner.

Each planning sub-problem gets its own template with fixed few-shot examples;
the final "Now," block is filled in per run. Templates carry their original
texture, including irregular spacing and phrasing inside the examples, so the
bundled example answers stay bit-identical to the texts the parsers and the
deterministic backend are checked against.
"""
from __future__ import annotations

KEY_INFO_MARKER = "Please extract key information from human instructions"
ROUGH_MARKER = "plan your rough work content with humans before the game starts"
REFINE_MARKER = "Please refine the rough work content based on the scenario information."
TIME_MARKER = "please estimate the approximate time required to perform this task"
SCHEDULE_MARKER = "Please adjust the order of execution for the rough work content"
REFINE_TIME_MARKER = ("Please refine the rough work content based on the scenario "
                      "information and estimate the approximate time required to "
                      "perform it.")

_KEY_INFO_TEMPLATE = """\
In a collaborative cooking game, you are an AI who needs to play the role of a chef with one human player. Before the game starts, humans will communicate with you, giving you human instructions. Please extract key information from human instructions, including 'Cooking Objectives' and' My Work '.
Making any dish requires using a pot and completing two tasks: 'Fetching vegetables' and 'Delivering food'. Therefore, if humans indicate that you need to make a certain type of food yourself, then you need both 'Fetching vegetables' and 'Delivering food'. Among them, 'Fetching vegetables' refers to placing an uncooked ingredient in a pot for the next step of work. 'Delivering food' refers to the delivery of food from a pot to the delivery port after it has been cooked.
If the cooking objective is tomato soup, then the ingredient to be placed in the pot is tomato; Similarly, if the cooking goal is onion soup, the ingredient to be prepared in the pot is onion.

For Example 1:
The instructions for humans are: Please make tomato soup.
Your answer:
Cooking objectives: tomato soup
AI’s jobs:
Fetching vegetables: All pots.
Delivering food: All pots.

For Example 2:
The instructions for humans are: Please make tomato soup, and you are only responsible for preparing tomatoes. Please take the tomatoes from the tomato spot on the right.
Your answer:
Cooking objectives: tomato soup
AI’s jobs:
Fetching vegetables: All pots.
Delivering food: Not mentioned.

For Example 3:
The instructions for humans are: Please use the pot on the right to make onion soup.
Your answer:
Cooking objectives: onion soup
AI’s jobs:
Fetching vegetables: the pot on the right.
Delivering food: the pot on the right.

For Example 4:
The instructions for humans are: Please use the pot on the left to make onion soup and be responsible for the delivery of the middle pot.
Your answer:
Cooking objectives: onion soup
AI’s jobs:
Fetching vegetables: the pot on the left.
Delivering food: the pot on the left + the middle pot.

Now, the instructions for humans are: {instruction}
Please provide your answer by giving examples."""


_ROUGH_TEMPLATE = """\
In a collaborative cooking game, you need to play the role of a chef with one human player. To collaborate better with humans in the game, you need to plan your rough work content with humans before the game starts.
Firstly, you need to clarify the location of the pot mentioned in the key information. Then, based on the job description of AI in the key information, obtain the rough work content of AI. Finally, obtain the rough work content that humans need to complete.

For Example 1:
The pot in the scene: (1,2), (1,3), (1,4)
Key information in human instructions:
Cooking objectives: onion soup
AI’s jobs:
(1) Fetching vegetables: the pot on the left.
(2) Delivering food: the pot on the left + the middle pot.

Your answer:
the pot on the left is pot (1,2)
the middle pot is pot (1,3)
So, the rough work contents that AI need to do are:
(1) Fetch onions for pot at (1,2)
(2) Deliver onion soup for pot (1,2)
(3) Deliver onion soup for pot (1,3)
Correspondingly, the rough tasks that humans need to complete are:
(1) Fetch onions for pot at (1,3)
(2) Fetch onions for pot at (1,4)
(3) Deliver onion soup for pot (1,4)

Now, the pot in the scene: {pots}
Key information in human instructions:
{key_info}
Please provide your answer by giving examples."""


_REFINE_RULES = """\
The rough work content is divided into two categories:
One is to pick up ingredients, which need to be refined to where to take the ingredients from and into which pot.
The second is to deliver food, which needs to be refined to the location from which the plate is taken, then the food is placed in the plate in which pot, and then the food loaded on the plate is sent to which delivery port.
In addition, you also need to consider whether there are restrictions on the items you can use in human instructions."""

_REFINE_EXAMPLES = """\
For Example 1:
Human instructions: Please prepare onions.
The rough work content is: Pick up onions for pot (1,2)
Scenario information is:
Location of Tomatoes: (2,5), (3,5)
Location of Onions: (2,1), (3,1)
Location of the dining plate: (4,1), (4,5)
Location of the delivery port: (5,2)
Your answer:
There are no additional restrictions in the human instructions on where to take onions.
For the first onion position (2,1), its distance from the pot (1,2) is | 2-1 |+| 1-2 |=1+1=2.
For the second onion position (3,1), its distance from the pot (1,2) is | 3-1 |+| 1-2 |=2+1=3.
Therefore, I should choose a location (2,1) closer to the pot (1,2) to take the onion.
So, the refined work content is: Take the onion from position (2,1) and place it in the pot (1,2).

For Example 2:
Human instructions: Please use the pot on the right to make tomato soup.
The rough work content is: Deliver tomato soup for pot to (1,3)
Scenario information is:
Location of Tomatoes: (2,5), (3,5)
Location of Onions: (2,1), (3,1)
Location of the dining plates: (4,1), (4,5)
Location of the delivery ports: (5,2)
Your answer:
There are no additional restrictions in the human instructions on where to pick up the plate and which delivery point to deliver it to.
For the first dining plate position (4,1), its distance from the pot (1,3) is |4-1 |+| 1-3 |=3+2=5.
For the second dining plate position (4,5), its distance from the pot (1,3) is | 4-1 |+| 5-3 |=3+2=5.
Therefore, I should choose a location (4,1) closer to the pot (1,3) to take a plate.
For the first delivery port (5,2), its distance from the pot (1,3) is | 5-1 |+| 2-3 |=4+1=5.
Therefore, I should choose the delivery port (5,2) closer to the pot (1,3) to deliver the food.
So, the refined work content is: Take the plate from (4, 1), then take the food from the pot (1, 3), and finally deliver it to the delivery port (5, 2).

For Example 3:
Human instructions: Please prepare onions. You can only take onions from the onion dots below.
The rough work content is: Pick up onions for pot (1,2)
Scenario information is:
Location of Tomatoes: (2,5), (3,5)
Location of Onions: (2,1), (3,1)
Location of the dining plate: (4,1), (4,5)
Location of the delivery port: (5,2)
Your answer:
The human instructions require me to pick onions from the onion dots below.
the onion dots below is (3,1).
So, the refined work content is: Take the onion from position (3,1) and place it in the pot (1,2)."""

_REFINE_TEMPLATE = (REFINE_MARKER + "\n" + _REFINE_RULES + "\n\n" + _REFINE_EXAMPLES + """

Now, the human instructions are: {instruction}
The rough work content is: {rough}
Scenario information is:
{scenario}
Please provide your answer by giving examples.""")


_TIME_RULES = """\
Among them, each move of a character requires one time step, and interacting with objects in the scene requires one time step.
For two types of work:
(1) Fetching vegetables: the approximate time is six times the time it takes to move the vegetables from their position to the pot position.
(2) Delivering food: the approximate time is from the position of the plate to the position of the pot, to the position of the delivery port, and then to the position of the plate."""

_TIME_EXAMPLES = """\
For Example 1:
The rough work content is: Pick up onions for pot (1,2)
The refined work content is: Take the onion from position (2,1) and place it in the pot (1,2).
Your answer:
Moving onions from (2,1) to (1,2) requires |2-1|+|1-2|=1+1=2 steps.
So, the approximate time is: 2 x 6 = 12 steps.

For Example 2:
The rough work content is: Deliver tomato soup for pot (1,3)
The refined work content is: Take the plate from (4, 1), then take the food from the pot (1, 3), and finally deliver it to the delivery port (5, 2).
Your answer:
Moving from (4,1) to (1,3) requires |4-1|+|1-3|=3+2=5 steps.
Moving from (1,3) to (5,2) requires |1-5|+|3-2|=4+1=5 steps.
Moving from (5,2) to (4,1) requires |5-4|+|2-1|=1+1=2 steps.
So, the approximate time is: 5 + 5 +2 = 12 steps."""

_TIME_TEMPLATE = ("There is currently a task in a grid world, " + TIME_MARKER + ".\n"
                  + _TIME_RULES + "\n\n" + _TIME_EXAMPLES + """

Now, the rough work content is: {rough}
The refined work content is: {refined}
Please provide your answer by giving examples.""")


_SCHEDULE_TEMPLATE = """\
Please adjust the order of execution for the rough work content that needs to be completed.
Please note that there are two rough job descriptions: picking up vegetables and delivering food. However, for the same pot, delivery work can only be carried out 20 time steps after completing the vegetable picking work.

For Example 1:
The rough work contents are:
(1) Fetch onions for pot at (1,2), 12 steps
(2) Deliver onion soup for pot (1,2), 10 steps
(3) Fetch onions for pot at (1,3), 18 steps
Your answer:
Due to the fact that the execution of the work 'Delivery on soup for pot (1,2)' requires 20 time steps after completing the 'Pick up onions for pot (1,2)', in order to fully utilize the waiting time, other work should be performed during this period.
Therefore, the work sequence should be adjusted to:
(1) Fetch onions for pot at (1,2), 12 steps
(2) Fetch onions for pot at (1,3), 18 steps
(3) Deliver onion soup for pot (1,2), 10 steps

Now, the rough work contents are:
{items}
Please give me your answer as the example."""


_REFINE_TIME_TEMPLATE = (REFINE_TIME_MARKER + "\n" + _REFINE_RULES + "\n" + _TIME_RULES
                         + "\n\n" + _REFINE_EXAMPLES + "\n\n" + _TIME_EXAMPLES + """

Now, the human instructions are: {instruction}
The rough work content is: {rough}
Scenario information is:
{scenario}
Please provide your answer by giving examples.""")


def build_key_info_prompt(instruction: str) -> str:
    return _KEY_INFO_TEMPLATE.format(instruction=instruction)


def build_rough_prompt(pots: str, key_info: str) -> str:
    return _ROUGH_TEMPLATE.format(pots=pots, key_info=key_info)


def build_refine_prompt(instruction: str, rough: str, scenario: str) -> str:
    return _REFINE_TEMPLATE.format(instruction=instruction, rough=rough, scenario=scenario)


def build_time_prompt(rough: str, refined: str) -> str:
    return _TIME_TEMPLATE.format(rough=rough, refined=refined)


def build_refine_time_prompt(instruction: str, rough: str, scenario: str) -> str:
    return _REFINE_TIME_TEMPLATE.format(instruction=instruction, rough=rough,
                                        scenario=scenario)


def build_schedule_prompt(items: str) -> str:
    return _SCHEDULE_TEMPLATE.format(items=items)


TEMPLATE_BUILDERS = {
    "key_info": build_key_info_prompt,
    "rough": build_rough_prompt,
    "refine": build_refine_prompt,
    "time": build_time_prompt,
    "refine_time": build_refine_time_prompt,
    "schedule": build_schedule_prompt,
}
